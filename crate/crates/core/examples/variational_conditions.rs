//! Hemicontinuity, local monotonicity, coercivity and growth of
//! `A(u) = (L - eps) Psi(u)` sampled on the torus and on a random spectrum.

use levy_pme::estimates::check_variational_conditions;
use levy_pme::{NoiseModel, Nonlinearity, OperatorSpectrum, PsiKind};
use rand::{Rng, SeedableRng};

fn main() -> levy_pme::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let random: Vec<f64> = (0..48).map(|_| rng.random_range(0.0..500.0)).collect();
    let operators = [
        ("torus", OperatorSpectrum::fractional_laplacian_torus(24, 0.9, 1.0)?),
        ("random spectrum", OperatorSpectrum::from_eigenvalues(random, None)?),
    ];
    for (name, op) in &operators {
        for kind in PsiKind::shipped() {
            let psi = Nonlinearity::new(kind)?;
            for eps in [0.01, 0.1, 0.5] {
                let r = check_variational_conditions(op, &psi, &NoiseModel::silent(), eps, 2_000, 8)?;
                println!(
                    "{name:<16} {:<14} eps={eps:<5} K={:<8.3} growth slack {:.2e}  hemicontinuity ratio {:.3}  coercivity {}",
                    kind.name(),
                    r.constants.big_k,
                    r.growth_slack,
                    r.hemicontinuity_ratio,
                    r.coercivity_slack.map(|s| format!("{s:.2e}")).unwrap_or_else(|| "n/a".into())
                );
            }
        }
    }
    Ok(())
}
