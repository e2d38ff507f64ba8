//! Norms of the scale `L^2 ⊂ F*_{1,2} ⊂ (L^2)*` in diagonal form.
//!
//! With `c_k` the coefficients of a field and `mu_k` the eigenvalues of `-L`:
//!
//! | norm | squared value |
//! |------|---------------|
//! | `|u|_2` | `sum c_k^2` |
//! | `‖u‖_{F_{1,2}}` | `sum (1 + mu_k) c_k^2` |
//! | `‖u‖_{F*_{1,2},eps}` | `sum c_k^2 / (eps + mu_k)` |
//!
//! The dual `(L^2)*` reuses the same coefficient vectors: an element `w`
//! corresponds to `(1 - L)u` and its norm is `|(1 - L)^{-1} w|_2`.

use crate::error::{Error, Result};
use crate::spectral::{Field, OperatorSpectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    F12,
    /// `‖·‖_{F*_{1,2},eps}`; `F12Star(1.0)` is the plain `‖·‖_{F*_{1,2}}`.
    F12Star(f64),
}

impl NormKind {
    pub const F12_DUAL: NormKind = NormKind::F12Star(1.0);

    fn weight(self, mu: f64) -> f64 {
        match self {
            NormKind::L2 => 1.0,
            NormKind::F12 => 1.0 + mu,
            NormKind::F12Star(eps) => 1.0 / (eps + mu),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            NormKind::F12Star(eps) if !(eps > 0.0 && eps.is_finite()) => Err(Error::InvalidParameter {
                name: "epsilon",
                value: eps,
                constraint: "norm parameter must be positive",
            }),
            _ => Ok(()),
        }
    }
}

/// Squared norm of a raw coefficient vector.
pub fn norm_sq_coefficients(op: &OperatorSpectrum, c: &[f64], kind: NormKind) -> f64 {
    c.iter()
        .zip(op.eigenvalues())
        .map(|(&ck, &mu)| kind.weight(mu) * ck * ck)
        .sum()
}

/// Weighted inner product of raw coefficient vectors.
pub fn inner_coefficients(op: &OperatorSpectrum, a: &[f64], b: &[f64], kind: NormKind) -> f64 {
    a.iter()
        .zip(b)
        .zip(op.eigenvalues())
        .map(|((&x, &y), &mu)| kind.weight(mu) * x * y)
        .sum()
}

/// Squared norm of the difference of two coefficient vectors.
pub fn distance_sq_coefficients(op: &OperatorSpectrum, a: &[f64], b: &[f64], kind: NormKind) -> f64 {
    a.iter()
        .zip(b)
        .zip(op.eigenvalues())
        .map(|((&x, &y), &mu)| kind.weight(mu) * (x - y) * (x - y))
        .sum()
}

pub fn norm(op: &OperatorSpectrum, u: &Field, kind: NormKind) -> Result<f64> {
    kind.validate()?;
    op.check_len(u.mode_count())?;
    Ok(norm_sq_coefficients(op, u.coefficients(), kind).sqrt())
}

pub fn inner_product(op: &OperatorSpectrum, u: &Field, v: &Field, kind: NormKind) -> Result<f64> {
    kind.validate()?;
    op.check_len(u.mode_count())?;
    op.check_len(v.mode_count())?;
    Ok(inner_coefficients(op, u.coefficients(), v.coefficients(), kind))
}

/// Pairing `_{(L^2)*}<w, v>_{L^2}` of a dual element with an `L^2` field.
///
/// For `w = (1 - L)u` this equals `∫ u v dμ`.
pub fn duality_pairing(op: &OperatorSpectrum, w: &Field, v: &Field) -> Result<f64> {
    op.check_len(w.mode_count())?;
    op.check_len(v.mode_count())?;
    Ok(dual_pairing_coefficients(op, w.coefficients(), v.coefficients()))
}

pub fn dual_pairing_coefficients(op: &OperatorSpectrum, w: &[f64], v: &[f64]) -> f64 {
    w.iter()
        .zip(v)
        .zip(op.eigenvalues())
        .map(|((&a, &b), &mu)| a * b / (1.0 + mu))
        .sum()
}

/// Norm of `w` in `(L^2)*`.
pub fn dual_norm(op: &OperatorSpectrum, w: &Field) -> Result<f64> {
    op.check_len(w.mode_count())?;
    Ok(dual_norm_coefficients(op, w.coefficients()))
}

pub fn dual_norm_coefficients(op: &OperatorSpectrum, w: &[f64]) -> f64 {
    w.iter()
        .zip(op.eigenvalues())
        .map(|(&a, &mu)| (a / (1.0 + mu)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `∫ u v dμ` evaluated on the physical nodes.
pub fn physical_integral(u: &Field, v: &Field) -> f64 {
    u.physical_values()
        .iter()
        .zip(v.physical_values())
        .zip(u.weights())
        .map(|((a, b), w)| w * a * b)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::OperatorFunction;

    fn single(mu: f64) -> (OperatorSpectrum, Field) {
        let op = OperatorSpectrum::from_eigenvalues(vec![mu], None).unwrap();
        let u = op.unit_mode(0).unwrap();
        (op, u)
    }

    #[test]
    fn unit_mode_norms() {
        let (op, u) = single(3.0);
        assert!((norm(&op, &u, NormKind::F12).unwrap() - 2.0).abs() < 1e-15);
        assert!((norm(&op, &u, NormKind::F12_DUAL).unwrap() - 0.5).abs() < 1e-15);
        assert!((norm(&op, &u, NormKind::L2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_epsilon_and_mismatch() {
        let (op, u) = single(3.0);
        assert!(norm(&op, &u, NormKind::F12Star(0.0)).is_err());
        let other = OperatorSpectrum::from_eigenvalues(vec![1.0, 2.0], None).unwrap();
        let v = other.unit_mode(1).unwrap();
        assert!(matches!(
            inner_product(&op, &u, &v, NormKind::L2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(duality_pairing(&op, &v, &u).is_err());
    }

    #[test]
    fn orthogonal_modes_pair_to_zero() {
        let op = OperatorSpectrum::fractional_laplacian_torus(3, 0.6, 1.0).unwrap();
        let a = op.unit_mode(1).unwrap();
        let b = op.unit_mode(4).unwrap();
        for kind in [NormKind::L2, NormKind::F12, NormKind::F12Star(0.3)] {
            assert_eq!(inner_product(&op, &a, &b, kind).unwrap(), 0.0);
        }
        let w = op.apply(OperatorFunction::ResolventPower { alpha: 1.0, power: crate::spectral::Power::One }, &a).unwrap();
        assert!(duality_pairing(&op, &w, &b).unwrap().abs() < 1e-15);
        assert!((duality_pairing(&op, &w, &a).unwrap() - 1.0).abs() < 1e-12);
    }
}
