//! Functional calculus of a diagonal operator: the Gamma-transform
//! quadrature against the closed form `(1 - L)^{-r/2}`, and the norm scale
//! `L^2 ⊂ F*_{1,2}`.

use levy_pme::spaces::{norm, NormKind};
use levy_pme::spectral::{GammaQuadrature, OperatorFunction, Power};
use levy_pme::OperatorSpectrum;

fn main() -> levy_pme::Result<()> {
    let op = OperatorSpectrum::fractional_laplacian_torus(64, 0.8, 1.0)?;
    println!("{} modes, largest eigenvalue {:.1}", op.mode_count(), op.max_eigenvalue());

    let coeffs: Vec<f64> = (0..op.mode_count()).map(|k| 1.0 / (1.0 + k as f64)).collect();
    let u = op.field(coeffs)?;
    let rule = GammaQuadrature::default();
    for r in [0.5, 1.0, 2.0] {
        let quad = op.gamma_transform(r, &u, &rule)?;
        let exact: Vec<f64> = u
            .coefficients()
            .iter()
            .zip(op.eigenvalues())
            .map(|(c, mu)| c * (1.0 + mu).powf(-r / 2.0))
            .collect();
        let err = quad
            .coefficients()
            .iter()
            .zip(&exact)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        println!("r = {r}: max relative deviation from (1+mu)^(-r/2) = {err:.2e}");
    }

    let resolvent = op.apply(OperatorFunction::ResolventPower { alpha: 1.0, power: Power::MinusHalf }, &u)?;
    println!(
        "|(1-L)^(-1/2) u|_2 = {:.12}, ‖u‖_F* = {:.12}",
        norm(&op, &resolvent, NormKind::L2)?,
        norm(&op, &u, NormKind::F12_DUAL)?
    );
    for eps in [0.5, 0.1, 0.01] {
        let n = norm(&op, &u, NormKind::F12Star(eps))?;
        println!("‖u‖_(F*,{eps}) = {n:.6}  (between ‖u‖_F* and ‖u‖_F*/sqrt(eps))");
    }
    Ok(())
}
