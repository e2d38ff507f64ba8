//! Finite-activity Poisson random measures: path sampling, jump counts,
//! compensated increments and the growth/Lipschitz audit of the jump
//! coefficient.

use levy_pme::noise::{audit_coefficient, compensated_increment, path_seed, sample_noise_path};
use levy_pme::spaces::{norm, NormKind};
use levy_pme::stats::{poisson_chi_square, Estimate};
use levy_pme::{ContractionMap, JumpCoefficient, NoiseModel, OperatorSpectrum};

fn main() -> levy_pme::Result<()> {
    let op = OperatorSpectrum::fractional_laplacian_torus(8, 1.0, 1.0)?;
    let model = NoiseModel::new(
        vec!["up".into(), "down".into()],
        vec![2.0, 0.5],
        JumpCoefficient::Multiplicative {
            sigma: vec![0.4, -0.3],
            map: ContractionMap::Semigroup { tau: 0.02 },
        },
    )?;

    let path = sample_noise_path(&model, 1.0, path_seed(42, 0))?;
    println!("path 0 has {} jumps:", path.jumps.len());
    let mut table = Vec::new();
    path.write_table(&model, &mut table)?;
    print!("{}", String::from_utf8_lossy(&table));

    let counts: Vec<usize> = (0..10_000)
        .map(|i| sample_noise_path(&model, 1.0, path_seed(42, i)).map(|p| p.count_by_mark(2)[0]))
        .collect::<levy_pme::Result<_>>()?;
    let est = Estimate::from_samples(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
    println!("mark `up`: mean count {:.4} ± {:.4} (expected 2)", est.mean, est.std_error);
    println!("chi-square p-value against Poisson(2): {:.3}", poisson_chi_square(&counts, 2.0)?);

    let u = op.field((0..op.mode_count()).map(|k| 1.0 / (1.0 + k as f64)).collect())?;
    let inc = compensated_increment(&op, &model, &path, &u, (0.0, 1.0))?;
    println!("compensated increment over (0, 1]: ‖·‖_F* = {:.4}", norm(&op, &inc, NormKind::F12_DUAL)?);

    let audit = audit_coefficient(&model, &op, 5_000, 9)?;
    println!(
        "growth constant {:.4} (sampled {:.4}), Lipschitz constant {:.4} (sampled {:.4})",
        audit.c1, audit.c1_sampled, audit.c2, audit.c2_sampled
    );
    Ok(())
}
