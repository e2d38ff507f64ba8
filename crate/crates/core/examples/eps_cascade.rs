//! The `eps -> 0` Cauchy study, with the smallest lambda of the ladder in
//! place of the `lambda -> 0` limit, on an imported spectrum.

use levy_pme::cascade::{eps_cauchy_study, SolverSettings, StudyPlan};
use levy_pme::{JumpCoefficient, NoiseModel, Nonlinearity, OperatorSpectrum, PsiKind};

fn main() -> levy_pme::Result<()> {
    let table = "# label, eigenvalue\nconst, 0\nslow, 2.5\nmid, 40\nfast, 900\n";
    let op = OperatorSpectrum::read_table(table.as_bytes())?;
    let x = op.field(vec![1.0, -0.5, 0.3, 0.1])?;
    let plan = StudyPlan {
        psi: Nonlinearity::new(PsiKind::Saturating { cap: 0.8 })?,
        noise: NoiseModel::new(
            vec!["kick".into()],
            vec![2.0],
            JumpCoefficient::Additive(vec![vec![0.0, 0.3, 0.0, 0.05]]),
        )?,
        x,
        lambda_ladder: vec![0.1, 0.01],
        epsilon_ladder: vec![0.2, 0.1, 0.05, 0.025],
        paths: 32,
        h: 0.01,
        horizon: 1.0,
        master_seed: 5,
        solver: SolverSettings::default(),
        op,
    };
    let report = eps_cauchy_study(&plan)?;
    for p in &report.pairs {
        println!("eps = {:<6} eps' = {:<6} E sup ‖ΔX‖²_F* = {:.4e} ± {:.1e}", p.first, p.second, p.sup_sq.mean, p.sup_sq.std_error);
    }
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
