//! Backward Euler with resolvent splitting: a single implicit step, then
//! the observed temporal order against the exponential solution of the
//! linear problem.

use levy_pme::noise::sample_noise_path;
use levy_pme::stats::log_log_slope;
use levy_pme::stepper::{implicit_step, solve_regularized_path};
use levy_pme::{NoiseModel, Nonlinearity, OperatorSpectrum, PsiKind, StepConfig};

fn main() -> levy_pme::Result<()> {
    let single = OperatorSpectrum::from_eigenvalues(vec![1.0], None)?;
    let id = Nonlinearity::new(PsiKind::Identity)?;
    let u = implicit_step(&single, &id, &StepConfig::new(&id, 0.1, 0.1, 0.0)?, &single.field(vec![1.0])?)?;
    println!("single step: u = {:.9} (1/1.11 = {:.9})", u.coefficients()[0], 1.0 / 1.11);

    // a mildly stiff spectrum, so the coarsest steps are already asymptotic
    let op = OperatorSpectrum::from_eigenvalues(vec![0.0, 1.0, 4.0, 9.0], None)?;
    let (eps, lambda, t_end) = (0.2, 0.1, 1.0);
    let x: Vec<f64> = (0..op.mode_count()).map(|k| 1.0 / (1.0 + k as f64)).collect();
    let noise = NoiseModel::silent();
    let path = sample_noise_path(&noise, t_end, 0)?;
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    for j in 4..=9 {
        let h = 0.5f64.powi(j);
        let traj = solve_regularized_path(&op, &id, &noise, &path, &StepConfig::new(&id, h, eps, lambda)?, &op.field(x.clone())?)?;
        let err: f64 = traj
            .final_state()
            .iter()
            .zip(&x)
            .zip(op.eigenvalues())
            .map(|((v, x0), mu)| (v - x0 * (-(eps + mu) * (1.0 + lambda) * t_end).exp()).powi(2))
            .sum::<f64>()
            .sqrt();
        println!("h = 2^-{j}: terminal error {err:.3e}");
        hs.push(h);
        errors.push(err);
    }
    println!("observed order {:.3}", log_log_slope(&hs, &errors)?);

    let sat = Nonlinearity::new(PsiKind::Saturating { cap: 0.5 })?;
    let traj = solve_regularized_path(&op, &sat, &noise, &path, &StepConfig::new(&sat, 0.01, eps, lambda)?, &op.field(x)?)?;
    println!("saturating Psi: {} steps, {} inner iterations in total", traj.times.len() - 1, traj.inner_iterations);
    Ok(())
}
