//! Diagonal representation of the negative definite self-adjoint generator.
//!
//! The operator `L` is stored through the eigenvalues `mu_k >= 0` of `-L`
//! together with an orthonormal basis that maps spectral coefficients to
//! values on a set of physical nodes. Quadrature weights on the nodes play
//! the role of the reference measure, so `|u|_2^2 = sum_i w_i u(x_i)^2`.
//!
//! Two families are provided: the fractional Laplacian `-(-Delta)^alpha` on a
//! one dimensional torus (real Fourier basis, trapezoidal weights), and
//! arbitrary user supplied eigenpairs.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Identifier of an eigenmode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeLabel {
    /// Signed Fourier index: `k > 0` is the cosine mode, `k < 0` the sine
    /// mode of frequency `|k|`, `k = 0` the constant.
    Fourier(i64),
    Named(String),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Fourier(k) => write!(f, "{k}"),
            ModeLabel::Named(s) => f.write_str(s),
        }
    }
}

#[derive(Debug)]
enum Basis {
    /// Nodes coincide with modes, unit weights.
    Identity,
    /// Row-major `nodes x modes` matrix; column `j` is mode `j` on the nodes.
    Dense(Vec<f64>),
}

/// Eigen-decomposition of `-L` with an orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorSpectrum {
    eigenvalues: Arc<[f64]>,
    labels: Arc<[ModeLabel]>,
    weights: Arc<[f64]>,
    basis: Arc<Basis>,
}

/// A state vector held simultaneously in spectral and physical form.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    coefficients: Vec<f64>,
    physical: Vec<f64>,
    weights: Arc<[f64]>,
}

impl Field {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn physical_values(&self) -> &[f64] {
        &self.physical
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }
}

/// Exponent of a resolvent power `(alpha - L)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    MinusOne,
    MinusHalf,
    Half,
    One,
}

impl Power {
    pub fn value(self) -> f64 {
        match self {
            Power::MinusOne => -1.0,
            Power::MinusHalf => -0.5,
            Power::Half => 0.5,
            Power::One => 1.0,
        }
    }
}

/// Functions of the generator that act diagonally on coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorFunction {
    /// `L` itself: multiplier `-mu_k`.
    Generator,
    /// `P_t = e^{tL}`: multiplier `e^{-t mu_k}`.
    Semigroup(f64),
    /// `(alpha - L)^p`: multiplier `(alpha + mu_k)^p`.
    ResolventPower { alpha: f64, power: Power },
}

impl OperatorFunction {
    fn validate(&self) -> Result<()> {
        match *self {
            OperatorFunction::Generator => Ok(()),
            OperatorFunction::Semigroup(t) => {
                if t >= 0.0 && t.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "t",
                        value: t,
                        constraint: "semigroup time must be >= 0",
                    })
                }
            }
            OperatorFunction::ResolventPower { alpha, .. } => ensure_positive("alpha", alpha),
        }
    }

    fn multiplier(&self, mu: f64) -> f64 {
        match *self {
            OperatorFunction::Generator => -mu,
            OperatorFunction::Semigroup(t) => (-t * mu).exp(),
            OperatorFunction::ResolventPower { alpha, power } => {
                let base = alpha + mu;
                match power {
                    Power::MinusOne => 1.0 / base,
                    Power::MinusHalf => 1.0 / base.sqrt(),
                    Power::Half => base.sqrt(),
                    Power::One => base,
                }
            }
        }
    }
}

impl OperatorSpectrum {
    /// Fractional Laplacian `-(-Delta)^alpha` on a torus of the given length,
    /// truncated to Fourier indices `|k| <= mode_cutoff`.
    ///
    /// Modes are ordered `0, 1, -1, 2, -2, ...`. The `2 * cutoff + 1`
    /// equispaced nodes make the trapezoidal rule exact on products of
    /// retained modes, so the discrete basis is exactly orthonormal.
    pub fn fractional_laplacian_torus(mode_cutoff: usize, alpha: f64, length: f64) -> Result<Self> {
        if mode_cutoff < 1 {
            return Err(Error::InvalidParameter {
                name: "mode_cutoff",
                value: mode_cutoff as f64,
                constraint: "must be >= 1",
            });
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                constraint: "must lie in (0, 1]",
            });
        }
        ensure_positive("length", length)?;

        let n = 2 * mode_cutoff + 1;
        let mut indices = Vec::with_capacity(n);
        indices.push(0i64);
        for k in 1..=mode_cutoff as i64 {
            indices.push(k);
            indices.push(-k);
        }

        let two_pi = 2.0 * std::f64::consts::PI;
        let eigenvalues: Vec<f64> = indices
            .iter()
            .map(|&k| {
                if k == 0 {
                    0.0
                } else {
                    (two_pi * k.unsigned_abs() as f64 / length).powf(2.0 * alpha)
                }
            })
            .collect();

        let w = length / n as f64;
        let c0 = 1.0 / length.sqrt();
        let ck = (2.0 / length).sqrt();
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            // phase 2 pi i k / n, reduced mod n to keep the argument small
            for (j, &k) in indices.iter().enumerate() {
                let m = k.unsigned_abs() as usize;
                let theta = two_pi * ((i * m) % n) as f64 / n as f64;
                matrix[i * n + j] = match k.signum() {
                    0 => c0,
                    1 => ck * theta.cos(),
                    _ => ck * theta.sin(),
                };
            }
        }

        Ok(Self {
            eigenvalues: eigenvalues.into(),
            labels: indices.into_iter().map(ModeLabel::Fourier).collect(),
            weights: vec![w; n].into(),
            basis: Arc::new(Basis::Dense(matrix)),
        })
    }

    /// Diagonal operator on a finite set of nodes with counting measure:
    /// node `j` carries mode `j`.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, labels: Option<Vec<ModeLabel>>) -> Result<Self> {
        validate_eigenvalues(&eigenvalues)?;
        let n = eigenvalues.len();
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.len(),
                })
            }
            Some(l) => l,
            None => (0..n).map(|j| ModeLabel::Named(j.to_string())).collect(),
        };
        Ok(Self {
            eigenvalues: eigenvalues.into(),
            labels: labels.into(),
            weights: vec![1.0; n].into(),
            basis: Arc::new(Basis::Identity),
        })
    }

    /// User supplied eigenpairs: `basis` is row-major `nodes x modes` with
    /// `nodes == modes`, orthonormal with respect to `weights`.
    pub fn from_eigenpairs(eigenvalues: Vec<f64>, weights: Vec<f64>, basis: Vec<f64>) -> Result<Self> {
        validate_eigenvalues(&eigenvalues)?;
        let n = eigenvalues.len();
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        if basis.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: basis.len(),
            });
        }
        for &w in &weights {
            ensure_positive("weight", w)?;
        }
        for a in 0..n {
            for b in a..n {
                let g: f64 = (0..n).map(|i| basis[i * n + a] * weights[i] * basis[i * n + b]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                if (g - target).abs() > 1e-10 {
                    return Err(Error::Config(format!(
                        "basis is not orthonormal: <e_{a}, e_{b}> = {g}"
                    )));
                }
            }
        }
        Ok(Self {
            eigenvalues: eigenvalues.into(),
            labels: (0..n).map(|j| ModeLabel::Named(j.to_string())).collect(),
            weights: weights.into(),
            basis: Arc::new(Basis::Dense(basis)),
        })
    }

    /// Reads a `label, eigenvalue` table. Blank lines and `#` comments are
    /// skipped. The result uses the counting-measure identity basis.
    pub fn read_table(reader: impl BufRead) -> Result<Self> {
        let mut labels = Vec::new();
        let mut eigenvalues = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (label, value) = content.split_once(',').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected `label, eigenvalue`".into(),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("not a number: `{}`", value.trim()),
            })?;
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("eigenvalue {value} must be finite and nonnegative"),
                });
            }
            labels.push(ModeLabel::Named(label.trim().to_string()));
            eigenvalues.push(value);
        }
        Self::from_eigenvalues(eigenvalues, Some(labels))
    }

    pub fn read_table_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_table(std::io::BufReader::new(file))
    }

    pub fn write_table(&self, mut out: impl std::io::Write) -> Result<()> {
        for (label, mu) in self.labels.iter().zip(self.eigenvalues.iter()) {
            writeln!(out, "{label}, {mu:.17e}")?;
        }
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(0.0, f64::max)
    }

    /// Coefficients to nodal values.
    pub fn to_physical(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; coefficients.len()];
        self.to_physical_into(coefficients, &mut out);
        out
    }

    pub fn to_physical_into(&self, coefficients: &[f64], out: &mut [f64]) {
        match &*self.basis {
            Basis::Identity => out.copy_from_slice(coefficients),
            Basis::Dense(m) => {
                let n = coefficients.len();
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &m[i * n..(i + 1) * n];
                    *o = row.iter().zip(coefficients).map(|(b, c)| b * c).sum();
                }
            }
        }
    }

    /// Nodal values to coefficients (projection with the quadrature weights).
    pub fn to_coefficients(&self, physical: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; physical.len()];
        self.to_coefficients_into(physical, &mut out);
        out
    }

    pub fn to_coefficients_into(&self, physical: &[f64], out: &mut [f64]) {
        match &*self.basis {
            Basis::Identity => out.copy_from_slice(physical),
            Basis::Dense(m) => {
                let n = physical.len();
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, (&p, &w)) in physical.iter().zip(self.weights.iter()).enumerate() {
                    let wp = w * p;
                    let row = &m[i * n..(i + 1) * n];
                    for (o, b) in out.iter_mut().zip(row) {
                        *o += b * wp;
                    }
                }
            }
        }
    }

    pub fn field(&self, coefficients: Vec<f64>) -> Result<Field> {
        self.check_len(coefficients.len())?;
        let physical = self.to_physical(&coefficients);
        Ok(Field {
            coefficients,
            physical,
            weights: self.weights.clone(),
        })
    }

    pub fn field_from_physical(&self, physical: Vec<f64>) -> Result<Field> {
        self.check_len(physical.len())?;
        let coefficients = self.to_coefficients(&physical);
        Ok(Field {
            coefficients,
            physical,
            weights: self.weights.clone(),
        })
    }

    pub fn zero_field(&self) -> Field {
        let n = self.mode_count();
        Field {
            coefficients: vec![0.0; n],
            physical: vec![0.0; n],
            weights: self.weights.clone(),
        }
    }

    /// Normalized eigenmode `e_j`.
    pub fn unit_mode(&self, j: usize) -> Result<Field> {
        if j >= self.mode_count() {
            return Err(Error::DimensionMismatch {
                expected: self.mode_count(),
                found: j + 1,
            });
        }
        let mut c = vec![0.0; self.mode_count()];
        c[j] = 1.0;
        self.field(c)
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.mode_count() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.mode_count(),
                found: len,
            })
        }
    }

    /// Applies a diagonal function of the generator to a field.
    pub fn apply(&self, func: OperatorFunction, u: &Field) -> Result<Field> {
        self.check_len(u.mode_count())?;
        let c = self.apply_to_coefficients(func, u.coefficients())?;
        self.field(c)
    }

    pub fn apply_to_coefficients(&self, func: OperatorFunction, c: &[f64]) -> Result<Vec<f64>> {
        func.validate()?;
        self.check_len(c.len())?;
        Ok(c.iter()
            .zip(self.eigenvalues.iter())
            .map(|(&ck, &mu)| func.multiplier(mu) * ck)
            .collect())
    }

    /// The Gamma-transform `V_r u` evaluated as a Bochner integral of the
    /// semigroup, independently of the closed form `(1 - L)^{-r/2}`.
    pub fn gamma_transform(&self, r: f64, u: &Field, rule: &GammaQuadrature) -> Result<Field> {
        self.check_len(u.mode_count())?;
        let c = rule.integrate(self, r, u.coefficients())?;
        self.field(c)
    }
}

fn validate_eigenvalues(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidParameter {
            name: "mode_count",
            value: 0.0,
            constraint: "must be >= 1",
        });
    }
    for &mu in eigenvalues {
        ensure_finite("eigenvalue", mu)?;
        if mu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "eigenvalue",
                value: mu,
                constraint: "eigenvalues of -L must be nonnegative",
            });
        }
    }
    Ok(())
}

/// Adaptive exp-sinh (double exponential) rule for
/// `Gamma(r/2)^{-1} int_0^inf t^{r/2-1} e^{-t} P_t u dt`.
///
/// Nodes `t = exp(pi/2 sinh s)` on a uniform `s` grid; the step is halved
/// until successive estimates differ by less than `tolerance` relative to
/// the L2 norm of the result. The algebraic endpoint singularity and the
/// wide range of decay rates `1 + mu_k` are both absorbed by the map.
#[derive(Debug, Clone, Copy)]
pub struct GammaQuadrature {
    pub tolerance: f64,
    pub max_levels: u32,
}

impl Default for GammaQuadrature {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_levels: 12,
        }
    }
}

const S_LOWER: f64 = -7.0;
const S_UPPER: f64 = 4.5;

impl GammaQuadrature {
    /// Per-mode integral weights `sum_j w_j e^{-t_j mu}` for nodes `s = s0 + j*step`.
    fn accumulate(&self, a: f64, log_norm: f64, eigenvalues: &[f64], coeffs: &[f64], s0: f64, step: f64, stride: usize, acc: &mut [f64]) {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let count = ((S_UPPER - s0) / step).floor() as usize;
        let mut j = 0;
        while j <= count {
            let s = s0 + j as f64 * step;
            let ln_t = half_pi * s.sinh();
            let t = ln_t.exp();
            // log of t^{a+1} * (pi/2) cosh s * e^{-t} / Gamma(a+1)
            let base = (a + 1.0) * ln_t + (half_pi * s.cosh()).ln() - t - log_norm;
            if base > -745.0 {
                for ((o, &c), &mu) in acc.iter_mut().zip(coeffs).zip(eigenvalues) {
                    let e = base - t * mu;
                    if e > -745.0 {
                        *o += e.exp() * c;
                    }
                }
            }
            j += stride;
        }
    }

    pub fn integrate(&self, op: &OperatorSpectrum, r: f64, coeffs: &[f64]) -> Result<Vec<f64>> {
        ensure_positive("r", r)?;
        let a = 0.5 * r - 1.0;
        let log_norm = ln_gamma(a + 1.0);
        let mu = op.eigenvalues();
        let n = coeffs.len();

        let mut step = 0.5;
        let mut sum = vec![0.0; n];
        self.accumulate(a, log_norm, mu, coeffs, S_LOWER, step, 1, &mut sum);
        let mut estimate: Vec<f64> = sum.iter().map(|v| v * step).collect();

        let mut last_change = f64::INFINITY;
        for _ in 0..self.max_levels {
            // refine: only the new midpoints are evaluated
            let mut mid = vec![0.0; n];
            self.accumulate(a, log_norm, mu, coeffs, S_LOWER + 0.5 * step, step, 1, &mut mid);
            for (s, m) in sum.iter_mut().zip(&mid) {
                *s += m;
            }
            step *= 0.5;
            let next: Vec<f64> = sum.iter().map(|v| v * step).collect();

            let diff: f64 = next.iter().zip(&estimate).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            estimate = next;
            last_change = if scale > 0.0 { diff / scale } else { 0.0 };
            if last_change < self.tolerance {
                return Ok(estimate);
            }
        }
        Err(Error::Quadrature {
            tolerance: self.tolerance,
            achieved: last_change,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(cutoff: usize, alpha: f64) -> OperatorSpectrum {
        OperatorSpectrum::fractional_laplacian_torus(cutoff, alpha, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn torus_symbol_matches_k_squared() {
        let op = torus(2, 1.0);
        let mu = op.eigenvalues();
        let expected = [0.0, 1.0, 1.0, 4.0, 4.0];
        for (a, b) in mu.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(op.labels()[3], ModeLabel::Fourier(2));
    }

    #[test]
    fn fractional_symbol_half_power() {
        let op = torus(4, 0.5);
        // label order 0, 1, -1, 2, -2, 3, -3, 4, -4
        assert!((op.eigenvalues()[7] - 4.0).abs() < 1e-12);
        assert_eq!(op.eigenvalues()[0], 0.0);
    }

    #[test]
    fn rejects_bad_torus_parameters() {
        assert!(OperatorSpectrum::fractional_laplacian_torus(2, 1.5, 1.0).is_err());
        assert!(OperatorSpectrum::fractional_laplacian_torus(2, 0.0, 1.0).is_err());
        assert!(OperatorSpectrum::fractional_laplacian_torus(2, 0.5, -1.0).is_err());
        assert!(OperatorSpectrum::fractional_laplacian_torus(0, 0.5, 1.0).is_err());
    }

    #[test]
    fn torus_transform_round_trip() {
        let op = torus(8, 0.7);
        let c: Vec<f64> = (0..op.mode_count()).map(|j| ((j * 7 + 3) % 11) as f64 - 5.0).collect();
        let back = op.to_coefficients(&op.to_physical(&c));
        let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let err: f64 = c.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-12 * norm, "round trip error {err}");
    }

    #[test]
    fn semigroup_examples() {
        let op = OperatorSpectrum::from_eigenvalues(vec![1.0, 2.0], None).unwrap();
        let u = op.field(vec![1.0, 1.0]).unwrap();
        let id = op.apply(OperatorFunction::Semigroup(0.0), &u).unwrap();
        assert_eq!(id.coefficients(), u.coefficients());
        let half = op.apply(OperatorFunction::Semigroup(std::f64::consts::LN_2), &u).unwrap();
        assert!((half.coefficients()[0] - 0.5).abs() < 1e-15);
        let res = op
            .apply(
                OperatorFunction::ResolventPower {
                    alpha: 2.0,
                    power: Power::MinusHalf,
                },
                &u,
            )
            .unwrap();
        assert!((res.coefficients()[1] - 0.5).abs() < 1e-15);
        let gen = op.apply(OperatorFunction::Generator, &u).unwrap();
        assert_eq!(gen.coefficients(), &[-1.0, -2.0]);
    }

    #[test]
    fn operator_function_errors() {
        let op = OperatorSpectrum::from_eigenvalues(vec![1.0], None).unwrap();
        let u = op.unit_mode(0).unwrap();
        assert!(op.apply(OperatorFunction::Semigroup(-1.0), &u).is_err());
        let bad = OperatorFunction::ResolventPower {
            alpha: 0.0,
            power: Power::One,
        };
        assert!(op.apply(bad, &u).is_err());
    }

    #[test]
    fn gamma_transform_examples() {
        let op = OperatorSpectrum::from_eigenvalues(vec![0.0, 3.0], None).unwrap();
        let u = op.field(vec![1.0, 1.0]).unwrap();
        let rule = GammaQuadrature::default();
        for r in [0.5, 1.0, 3.0] {
            let v = op.gamma_transform(r, &u, &rule).unwrap();
            assert!((v.coefficients()[0] - 1.0).abs() < 1e-10, "r={r}");
        }
        let v1 = op.gamma_transform(1.0, &u, &rule).unwrap();
        assert!((v1.coefficients()[1] - 0.5).abs() < 1e-10);
        let v2 = op.gamma_transform(2.0, &u, &rule).unwrap();
        assert!((v2.coefficients()[1] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn gamma_transform_reports_unreachable_tolerance() {
        let op = OperatorSpectrum::from_eigenvalues(vec![1.0], None).unwrap();
        let u = op.unit_mode(0).unwrap();
        let rule = GammaQuadrature {
            tolerance: 1e-30,
            max_levels: 2,
        };
        assert!(matches!(op.gamma_transform(1.0, &u, &rule), Err(Error::Quadrature { .. })));
    }

    #[test]
    fn spectrum_table_import() {
        let text = "# modes\na, 0.0\nb, 2.5\n\n";
        let op = OperatorSpectrum::read_table(text.as_bytes()).unwrap();
        assert_eq!(op.eigenvalues(), &[0.0, 2.5]);
        assert_eq!(op.labels()[1], ModeLabel::Named("b".into()));

        let err = OperatorSpectrum::read_table("a, 1\nb, -0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn eigenpairs_must_be_orthonormal() {
        let ok = OperatorSpectrum::from_eigenpairs(vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.0, 0.0, 1.0]);
        assert!(ok.is_ok());
        let bad = OperatorSpectrum::from_eigenpairs(vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0, 0.0, 1.0]);
        assert!(bad.is_err());
    }
}
