//! Monotone Lipschitz nonlinearities `Psi` applied pointwise on the nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiKind {
    Identity,
    ScaledLinear { a: f64 },
    Saturating { cap: f64 },
    /// `r - arctan(r) / 2`: slope between 1/2 and 1.
    SoftMonotone,
    Zero,
}

impl PsiKind {
    pub fn name(&self) -> &'static str {
        match self {
            PsiKind::Identity => "identity",
            PsiKind::ScaledLinear { .. } => "scaled_linear",
            PsiKind::Saturating { .. } => "saturating",
            PsiKind::SoftMonotone => "soft_monotone",
            PsiKind::Zero => "zero",
        }
    }

    /// One representative of every shipped kind.
    pub fn shipped() -> Vec<PsiKind> {
        vec![
            PsiKind::Identity,
            PsiKind::ScaledLinear { a: 2.5 },
            PsiKind::Saturating { cap: 1.0 },
            PsiKind::SoftMonotone,
            PsiKind::Zero,
        ]
    }
}

/// A nonlinearity with its declared constants.
///
/// `lipschitz` is a certified upper bound on the slope and `min_slope` a
/// certified lower bound; both are declared per kind and audited by
/// sampling in [`verify_psi_inequalities`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    kind: PsiKind,
    lipschitz: f64,
    min_slope: f64,
    coercivity: Option<f64>,
}

impl Nonlinearity {
    pub fn new(kind: PsiKind) -> Result<Self> {
        let (lipschitz, min_slope, coercivity) = match kind {
            PsiKind::Identity => (1.0, 1.0, Some(1.0)),
            PsiKind::ScaledLinear { a } => {
                ensure_positive("a", a)?;
                (a, a, Some(a))
            }
            PsiKind::Saturating { cap } => {
                ensure_positive("cap", cap)?;
                (1.0, 0.0, None)
            }
            PsiKind::SoftMonotone => (1.0, 0.5, Some(0.5)),
            PsiKind::Zero => (0.0, 0.0, None),
        };
        Ok(Self {
            kind,
            lipschitz,
            min_slope,
            coercivity,
        })
    }

    /// Overrides the declared constants without checking them, so that the
    /// audit can be exercised against a wrong declaration.
    pub fn with_declared(kind: PsiKind, lipschitz: f64, min_slope: f64, coercivity: Option<f64>) -> Self {
        Self {
            kind,
            lipschitz,
            min_slope,
            coercivity,
        }
    }

    pub fn kind(&self) -> PsiKind {
        self.kind
    }

    #[inline]
    pub fn evaluate(&self, r: f64) -> f64 {
        match self.kind {
            PsiKind::Identity => r,
            PsiKind::ScaledLinear { a } => a * r,
            PsiKind::Saturating { cap } => r.clamp(-cap, cap),
            PsiKind::SoftMonotone => r - 0.5 * r.atan(),
            PsiKind::Zero => 0.0,
        }
    }

    pub fn apply(&self, values: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(values) {
            *o = self.evaluate(v);
        }
    }

    /// `k = Lip(Psi)`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn min_slope(&self) -> f64 {
        self.min_slope
    }

    /// `(k + 1)^{-1}`.
    pub fn alpha_tilde(&self) -> f64 {
        1.0 / (self.lipschitz + 1.0)
    }

    /// The `c` with `Psi(r) r >= c r^2`, when the kind is coercive.
    pub fn coercivity(&self) -> Option<f64> {
        self.coercivity
    }
}

/// Smallest slack seen for each audited inequality.
#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    pub kind: &'static str,
    pub samples: usize,
    /// `(Psi(r)-Psi(r'))(r-r') - alpha~ |Psi(r)-Psi(r')|^2`
    pub cocoercive_slack: f64,
    /// `Psi(r) r - alpha~ |Psi(r)|^2`
    pub pointwise_slack: f64,
    /// `k |r-r'| - |Psi(r)-Psi(r')|`
    pub lipschitz_slack: f64,
    /// largest observed difference quotient
    pub max_slope: f64,
    /// `Psi(r) r - c r^2`, when `c` is declared
    pub coercivity_slack: Option<f64>,
}

/// Samples `sample_count` pairs uniformly from `range` and checks the
/// inequalities implied by monotonicity and the Lipschitz bound. The two
/// cocoercivity inequalities are checked with zero tolerance; the
/// Lipschitz and monotonicity audits allow a few ulps of rounding.
pub fn verify_psi_inequalities(psi: &Nonlinearity, sample_count: usize, range: (f64, f64), seed: u64) -> Result<PsiReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter {
            name: "sample_count",
            value: 0.0,
            constraint: "must be >= 1",
        });
    }
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::Config(format!("empty sample range [{lo}, {hi}]")));
    }
    let k = psi.lipschitz();
    let at = psi.alpha_tilde();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PsiReport {
        kind: psi.kind().name(),
        samples: sample_count,
        cocoercive_slack: f64::INFINITY,
        pointwise_slack: f64::INFINITY,
        lipschitz_slack: f64::INFINITY,
        max_slope: 0.0,
        coercivity_slack: psi.coercivity().map(|_| f64::INFINITY),
    };
    let violation = |name, slack: f64, r: f64, rp: f64| Error::Violation {
        name,
        slack,
        witness: format!("r = {r}, r' = {rp}"),
    };

    for _ in 0..sample_count {
        let r: f64 = rng.random_range(lo..hi);
        let rp: f64 = rng.random_range(lo..hi);
        let (pr, prp) = (psi.evaluate(r), psi.evaluate(rp));
        let dpsi = pr - prp;
        let dr = r - rp;

        let coc = dpsi * dr - at * dpsi * dpsi;
        if coc < 0.0 {
            return Err(violation("cocoercivity", coc, r, rp));
        }
        report.cocoercive_slack = report.cocoercive_slack.min(coc);

        let point = pr * r - at * pr * pr;
        if point < 0.0 {
            return Err(violation("pointwise cocoercivity", point, r, rp));
        }
        report.pointwise_slack = report.pointwise_slack.min(point);

        let rounding = 4.0 * f64::EPSILON * (r.abs() + rp.abs() + 1.0) * k.max(1.0);
        if dr != 0.0 {
            if dpsi * dr.signum() < -rounding {
                return Err(violation("monotonicity", dpsi * dr.signum(), r, rp));
            }
            let lip = k * dr.abs() - dpsi.abs();
            if lip < -rounding {
                return Err(violation("lipschitz", lip, r, rp));
            }
            report.lipschitz_slack = report.lipschitz_slack.min(lip);
            report.max_slope = report.max_slope.max(dpsi.abs() / dr.abs());
        }

        if let Some(c) = psi.coercivity() {
            let cs = pr * r - c * r * r;
            if cs < -rounding * r.abs() {
                return Err(violation("coercivity", cs, r, rp));
            }
            report.coercivity_slack = report.coercivity_slack.map(|s| s.min(cs));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_examples() {
        let id = Nonlinearity::new(PsiKind::Identity).unwrap();
        assert_eq!(id.evaluate(2.5), 2.5);
        let sat = Nonlinearity::new(PsiKind::Saturating { cap: 1.0 }).unwrap();
        assert_eq!(sat.evaluate(3.0), 1.0);
        assert_eq!(sat.evaluate(-3.0), -1.0);
        for kind in PsiKind::shipped() {
            assert_eq!(Nonlinearity::new(kind).unwrap().evaluate(0.0), 0.0, "{kind:?}");
        }
    }

    #[test]
    fn declared_constants() {
        let id = Nonlinearity::new(PsiKind::Identity).unwrap();
        assert_eq!(id.alpha_tilde(), 0.5);
        let zero = Nonlinearity::new(PsiKind::Zero).unwrap();
        assert_eq!(zero.lipschitz(), 0.0);
        assert_eq!(zero.alpha_tilde(), 1.0);
        assert!(zero.coercivity().is_none());
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(Nonlinearity::new(PsiKind::ScaledLinear { a: 0.0 }).is_err());
        assert!(Nonlinearity::new(PsiKind::Saturating { cap: -1.0 }).is_err());
    }

    #[test]
    fn saturating_pair_slack() {
        // (1 - (-1)) * 6 = 12 against 1/2 * 2^2 = 2
        let sat = Nonlinearity::new(PsiKind::Saturating { cap: 1.0 }).unwrap();
        let (r, rp) = (3.0, -3.0);
        let d = sat.evaluate(r) - sat.evaluate(rp);
        assert_eq!(d * (r - rp), 12.0);
        assert_eq!(sat.alpha_tilde() * d * d, 2.0);
    }

    #[test]
    fn zero_psi_has_zero_slack() {
        let zero = Nonlinearity::new(PsiKind::Zero).unwrap();
        let rep = verify_psi_inequalities(&zero, 1000, (-10.0, 10.0), 1).unwrap();
        assert_eq!(rep.cocoercive_slack, 0.0);
        assert_eq!(rep.pointwise_slack, 0.0);
    }

    #[test]
    fn identity_slope_is_certified_constant() {
        let id = Nonlinearity::new(PsiKind::Identity).unwrap();
        let rep = verify_psi_inequalities(&id, 10_000, (-1e3, 1e3), 7).unwrap();
        assert!((rep.max_slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_declaration_yields_witness() {
        let bogus = Nonlinearity::with_declared(PsiKind::ScaledLinear { a: 3.0 }, 1.0, 1.0, None);
        match verify_psi_inequalities(&bogus, 100, (-5.0, 5.0), 3) {
            Err(Error::Violation { witness, .. }) => assert!(witness.contains("r =")),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn sampling_errors() {
        let id = Nonlinearity::new(PsiKind::Identity).unwrap();
        assert!(verify_psi_inequalities(&id, 0, (-1.0, 1.0), 0).is_err());
        assert!(verify_psi_inequalities(&id, 5, (1.0, 1.0), 0).is_err());
    }
}
