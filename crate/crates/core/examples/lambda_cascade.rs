//! The `lambda -> 0` Cauchy study at fixed `eps` on coupled noise paths.

use levy_pme::cascade::{lambda_cauchy_study, SolverSettings, StudyPlan};
use levy_pme::{ContractionMap, JumpCoefficient, NoiseModel, Nonlinearity, OperatorSpectrum, PsiKind};

fn main() -> levy_pme::Result<()> {
    let op = OperatorSpectrum::fractional_laplacian_torus(16, 1.0, 1.0)?;
    let x = op.field((0..op.mode_count()).map(|k| 1.0 / (1.0 + k as f64).powi(2)).collect())?;
    let plan = StudyPlan {
        psi: Nonlinearity::new(PsiKind::SoftMonotone)?,
        noise: NoiseModel::new(
            vec!["a".into()],
            vec![3.0],
            JumpCoefficient::Multiplicative { sigma: vec![0.25], map: ContractionMap::Identity },
        )?,
        x,
        lambda_ladder: vec![0.2, 0.1, 0.05, 0.025],
        epsilon_ladder: vec![0.2, 0.1],
        paths: 32,
        h: 0.01,
        horizon: 1.0,
        master_seed: 17,
        solver: SolverSettings::default(),
        op,
    };
    let report = lambda_cauchy_study(&plan, 0.2)?;
    println!("lambda + lambda'   E sup ‖X_l - X_l'‖²_F*   std error");
    for p in &report.pairs {
        println!("{:>16.4}   {:>22.4e}   {:.2e}", p.sum, p.sup_sq.mean, p.sup_sq.std_error);
    }
    if let Some(fit) = &report.slope {
        println!(
            "slope {:.3}, 95% CI [{:.3}, {:.3}], threshold {}, fitted constant {:.3e}",
            fit.slope,
            fit.ci_low.unwrap_or(f64::NAN),
            fit.ci_high.unwrap_or(f64::NAN),
            fit.threshold,
            fit.fitted_constant
        );
    }
    Ok(())
}
