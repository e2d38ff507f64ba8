//! Sampled verification of the variational conditions satisfied by
//! `A(u) = (L - eps) Psi(u)` on the Gelfand triple `L^2 ⊂ F*_{1,2} ⊂ (L^2)*`.
//!
//! Pairings use the diagonal isometry: an element `w` of `F*_{1,2}` acting on
//! `v ∈ L^2` gives `sum w_k v_k / (1 + mu_k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{path_seed, sample_dual_scale, NoiseModel};
use crate::psi::Nonlinearity;
use crate::spaces::{dual_norm_coefficients, dual_pairing_coefficients, norm_sq_coefficients, NormKind};
use crate::spectral::OperatorSpectrum;

/// Constants entering the monotonicity and coercivity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateConstants {
    pub epsilon: f64,
    /// Lipschitz constant of `Psi`.
    pub k: f64,
    pub alpha_tilde: f64,
    /// growth constant of the jump coefficient
    pub c2: f64,
    /// Lipschitz constant of the jump coefficient
    pub c3: f64,
    /// `2 (1 - eps)^2 / alpha~ + C3`
    pub big_k: f64,
    pub c: Option<f64>,
    /// `theta^2 = c / (2 k^2 (1 - eps) + c)`; only defined when `c` is.
    pub theta: Option<f64>,
}

impl EstimateConstants {
    pub fn new(op: &OperatorSpectrum, psi: &Nonlinearity, noise: &NoiseModel, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                constraint: "must lie in (0, 1)",
            });
        }
        noise.check_compatible(op)?;
        let (c2, c3) = noise.closed_form_constants(op);
        let k = psi.lipschitz();
        let alpha_tilde = psi.alpha_tilde();
        let c = psi.coercivity();
        let theta = c.map(|c| (c / (2.0 * k * k * (1.0 - epsilon) + c)).sqrt());
        Ok(Self {
            epsilon,
            k,
            alpha_tilde,
            c2,
            c3,
            big_k: 2.0 * (1.0 - epsilon).powi(2) / alpha_tilde + c3,
            c,
            theta,
        })
    }

    /// Coefficient of `|u|_2^2` in the coercivity bound; negative by the
    /// choice of `theta`.
    pub fn coercivity_l2_coefficient(&self) -> Option<f64> {
        let (c, th) = (self.c?, self.theta?);
        Some(-2.0 * c + 2.0 * th * th * self.k * self.k * (1.0 - self.epsilon))
    }

    /// Coefficient of `‖u‖_{F*}^2` in the coercivity bound.
    pub fn coercivity_dual_coefficient(&self) -> Option<f64> {
        let th = self.theta?;
        Some(2.0 * (1.0 - self.epsilon) / (th * th) + self.c2)
    }

    /// Defining formula of every constant, for reports.
    pub fn formulas() -> Vec<(&'static str, &'static str)> {
        vec![
            ("k", "Lipschitz constant of Psi"),
            ("alpha_tilde", "1 / (k + 1)"),
            ("C2", "sum_z nu(z) sup |f(u,z)|^2 / (1 + |u|^2) in F*, closed form of the coefficient"),
            ("C3", "sum_z nu(z) Lip(f(.,z))^2 in F*, closed form of the coefficient"),
            ("K", "2 (1 - eps)^2 / alpha_tilde + C3"),
            ("theta", "sqrt(c / (2 k^2 (1 - eps) + c)), a chosen value making -2c + 2 theta^2 k^2 (1 - eps) < 0"),
        ]
    }
}

/// Coefficients of `A(u) = (L - eps) Psi(u)`.
pub fn apply_a(op: &OperatorSpectrum, psi: &Nonlinearity, epsilon: f64, u: &[f64]) -> Vec<f64> {
    let mut phys = op.to_physical(u);
    for p in phys.iter_mut() {
        *p = psi.evaluate(*p);
    }
    let mut c = op.to_coefficients(&phys);
    for (ck, mu) in c.iter_mut().zip(op.eigenvalues()) {
        *ck *= -(epsilon + mu);
    }
    c
}

/// Smallest slack of each condition over the samples (RHS minus LHS).
#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport {
    pub constants: EstimateConstants,
    pub samples: usize,
    /// `k |v|_2 |w|_2 - max_iota |<A(u + iota v) - A(u), w>| / iota`
    pub hemicontinuity_slack: f64,
    /// largest difference quotient relative to `k |v|_2 |w|_2`
    pub hemicontinuity_ratio: f64,
    pub monotonicity_slack: f64,
    pub coercivity_slack: Option<f64>,
    pub growth_slack: f64,
}

/// Rounding guard: a few ulps relative to the magnitude of the terms compared.
fn guard(scale: f64) -> f64 {
    64.0 * f64::EPSILON * scale
}

#[derive(Debug, Clone)]
struct Partial {
    hemi_slack: f64,
    hemi_ratio: f64,
    mono_slack: f64,
    coerc_slack: Option<f64>,
    growth_slack: f64,
}

fn violation(name: &'static str, slack: f64, witness: String) -> Error {
    Error::Violation { name, slack, witness }
}

fn describe(v: &[f64]) -> String {
    let shown: Vec<String> = v.iter().take(4).map(|x| format!("{x:.6e}")).collect();
    format!("[{}{}]", shown.join(", "), if v.len() > 4 { ", ..." } else { "" })
}

const HEMI_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn check_batch(
    op: &OperatorSpectrum,
    psi: &Nonlinearity,
    noise: &NoiseModel,
    k: &EstimateConstants,
    count: usize,
    seed: u64,
) -> Result<Partial> {
    let eps = k.epsilon;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = Partial {
        hemi_slack: f64::INFINITY,
        hemi_ratio: 0.0,
        mono_slack: f64::INFINITY,
        coerc_slack: k.c.map(|_| f64::INFINITY),
        growth_slack: f64::INFINITY,
    };
    let l2 = |v: &[f64]| norm_sq_coefficients(op, v, NormKind::L2);
    let fstar = |v: &[f64]| norm_sq_coefficients(op, v, NormKind::F12_DUAL);

    for _ in 0..count {
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let u1 = sample_dual_scale(op, &mut rng, scale);
        // every fourth pair coincides, exercising the degenerate case
        let u2 = if rng.random_range(0..4) == 0 {
            u1.clone()
        } else {
            sample_dual_scale(op, &mut rng, scale)
        };

        // monotonicity with the jump term
        let a1 = apply_a(op, psi, eps, &u1);
        let a2 = apply_a(op, psi, eps, &u2);
        let da: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x - y).collect();
        let d: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| x - y).collect();
        let pair = 2.0 * dual_pairing_coefficients(op, &da, &d);
        let jump = noise.jump_energy_difference(op, &u1, &u2, NormKind::F12_DUAL);
        let dn = fstar(&d);
        let rhs = k.big_k * dn;
        let slack = rhs - pair - jump;
        if slack < -guard(pair.abs() + jump + rhs) {
            return Err(violation("local monotonicity", slack, format!("u1 = {}, u2 = {}", describe(&u1), describe(&u2))));
        }
        part.mono_slack = part.mono_slack.min(slack);

        // coercivity
        if let (Some(cl2), Some(cdual)) = (k.coercivity_l2_coefficient(), k.coercivity_dual_coefficient()) {
            let lhs = 2.0 * dual_pairing_coefficients(op, &a1, &u1);
            let (n2, nd) = (l2(&u1), fstar(&u1));
            let rhs = cl2 * n2 + cdual * nd;
            let slack = rhs - lhs;
            if slack < -guard(lhs.abs() + cl2.abs() * n2 + cdual * nd) {
                return Err(violation("coercivity", slack, format!("u = {}", describe(&u1))));
            }
            part.coerc_slack = part.coerc_slack.map(|s| s.min(slack));
        }

        // growth
        let dual = dual_norm_coefficients(op, &a1);
        let bound = 2.0 * k.k * l2(&u1).sqrt();
        let slack = bound - dual;
        if slack < -guard(bound + dual) {
            return Err(violation("growth", slack, format!("u = {}", describe(&u1))));
        }
        part.growth_slack = part.growth_slack.min(slack);

        // hemicontinuity: difference quotients along a direction
        let v = sample_dual_scale(op, &mut rng, 1.0);
        let w = sample_dual_scale(op, &mut rng, 1.0);
        let base = dual_pairing_coefficients(op, &a1, &w);
        let lip = k.k * l2(&v).sqrt() * l2(&w).sqrt();
        for iota in HEMI_STEPS {
            let shifted: Vec<f64> = u1.iter().zip(&v).map(|(a, b)| a + iota * b).collect();
            let p = dual_pairing_coefficients(op, &apply_a(op, psi, eps, &shifted), &w);
            let diff = (p - base).abs();
            let slack = lip * iota - diff;
            if slack < -guard(base.abs() + p.abs() + lip * iota) {
                return Err(violation(
                    "hemicontinuity",
                    slack,
                    format!("u = {}, iota = {iota}", describe(&u1)),
                ));
            }
            part.hemi_slack = part.hemi_slack.min(slack / iota);
            if lip > 0.0 {
                part.hemi_ratio = part.hemi_ratio.max(diff / (lip * iota));
            }
        }
    }
    Ok(part)
}

/// Samples the four conditions: hemicontinuity, local monotonicity with the
/// jump term, coercivity (when `Psi` is coercive) and linear growth in
/// `(L^2)*`. Batches run in parallel with seeds fanned out from `seed`, and
/// the result does not depend on the worker count.
pub fn check_variational_conditions(
    op: &OperatorSpectrum,
    psi: &Nonlinearity,
    noise: &NoiseModel,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<VariationalReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: 0.0,
            constraint: "must be >= 1",
        });
    }
    let constants = EstimateConstants::new(op, psi, noise, epsilon)?;
    const BATCH: usize = 256;
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<Result<Partial>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH.min(samples - b * BATCH);
            check_batch(op, psi, noise, &constants, count, path_seed(seed, b as u64))
        })
        .collect();
    let mut report = VariationalReport {
        constants,
        samples,
        hemicontinuity_slack: f64::INFINITY,
        hemicontinuity_ratio: 0.0,
        monotonicity_slack: f64::INFINITY,
        coercivity_slack: constants.c.map(|_| f64::INFINITY),
        growth_slack: f64::INFINITY,
    };
    for part in parts {
        let p = part?;
        report.hemicontinuity_slack = report.hemicontinuity_slack.min(p.hemi_slack);
        report.hemicontinuity_ratio = report.hemicontinuity_ratio.max(p.hemi_ratio);
        report.monotonicity_slack = report.monotonicity_slack.min(p.mono_slack);
        report.growth_slack = report.growth_slack.min(p.growth_slack);
        report.coercivity_slack = match (report.coercivity_slack, p.coerc_slack) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, _) => a,
        };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{ContractionMap, JumpCoefficient};
    use crate::psi::PsiKind;

    #[test]
    fn growth_closed_form_single_mode() {
        // |A u|_{(L^2)*} = (mu + eps) / (1 + mu) |u|_2
        let op = OperatorSpectrum::from_eigenvalues(vec![4.0], None).unwrap();
        let psi = Nonlinearity::new(PsiKind::Identity).unwrap();
        let a = apply_a(&op, &psi, 0.1, &[2.0]);
        assert!((dual_norm_coefficients(&op, &a) - 4.1 / 5.0 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn identical_pair_has_zero_monotonicity_lhs() {
        let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
        let psi = Nonlinearity::new(PsiKind::SoftMonotone).unwrap();
        let u: Vec<f64> = (0..9).map(|k| (k as f64).sin()).collect();
        let a = apply_a(&op, &psi, 0.3, &u);
        let da: Vec<f64> = a.iter().map(|x| x - x).collect();
        assert_eq!(dual_pairing_coefficients(&op, &da, &[0.0; 9]), 0.0);
    }

    #[test]
    fn identity_monotonicity_per_mode() {
        // 2 <(L - eps) d, d> = -2 (mu + eps) / (1 + mu) d^2 <= 2 (1-eps)^2 / alpha~ * d^2 / (1 + mu)
        let eps = 0.1;
        for mu in [0.0, 0.5, 3.0, 400.0] {
            let lhs = -2.0 * (mu + eps) / (1.0 + mu);
            let rhs = 2.0 * (1.0f64 - eps).powi(2) / 0.5 / (1.0 + mu);
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn constants_follow_their_formulas() {
        let op = OperatorSpectrum::fractional_laplacian_torus(2, 1.0, 1.0).unwrap();
        let psi = Nonlinearity::new(PsiKind::ScaledLinear { a: 2.0 }).unwrap();
        let noise = NoiseModel::new(
            vec!["a".into()],
            vec![2.0],
            JumpCoefficient::Multiplicative {
                sigma: vec![0.5],
                map: ContractionMap::Identity,
            },
        )
        .unwrap();
        let k = EstimateConstants::new(&op, &psi, &noise, 0.2).unwrap();
        assert!((k.c3 - 0.5).abs() < 1e-15);
        assert!((k.big_k - (2.0 * 0.64 * 3.0 + 0.5)).abs() < 1e-12);
        let th2 = k.theta.unwrap().powi(2);
        assert!((th2 - 2.0 / (2.0 * 4.0 * 0.8 + 2.0)).abs() < 1e-15);
        assert!(k.coercivity_l2_coefficient().unwrap() < 0.0);
    }

    #[test]
    fn all_conditions_hold_on_small_torus() {
        let op = OperatorSpectrum::fractional_laplacian_torus(8, 0.7, 1.0).unwrap();
        for kind in PsiKind::shipped() {
            let psi = Nonlinearity::new(kind).unwrap();
            let rep = check_variational_conditions(&op, &psi, &NoiseModel::silent(), 0.1, 500, 9).unwrap();
            assert!(rep.growth_slack >= 0.0);
            assert!(rep.hemicontinuity_ratio <= 1.0 + 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn wrong_lipschitz_declaration_is_caught() {
        let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
        let psi = Nonlinearity::with_declared(PsiKind::ScaledLinear { a: 3.0 }, 1.0, 1.0, None);
        assert!(matches!(
            check_variational_conditions(&op, &psi, &NoiseModel::silent(), 0.1, 200, 1),
            Err(Error::Violation { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
        let psi = Nonlinearity::new(PsiKind::Saturating { cap: 0.5 }).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| check_variational_conditions(&op, &psi, &NoiseModel::silent(), 0.5, 1000, 4).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.monotonicity_slack.to_bits(), b.monotonicity_slack.to_bits());
        assert_eq!(a.hemicontinuity_ratio.to_bits(), b.hemicontinuity_ratio.to_bits());
    }
}
