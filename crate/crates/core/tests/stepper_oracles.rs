use levy_pme::noise::{path_seed, sample_noise_path, Jump, NoisePath};
use levy_pme::spaces::{distance_sq_coefficients, norm_sq_coefficients};
use levy_pme::stats::log_log_slope;
use levy_pme::stepper::{implicit_step, solve_regularized_path};
use levy_pme::{JumpCoefficient, NoiseModel, Nonlinearity, NormKind, OperatorSpectrum, PsiKind, StepConfig};
use proptest::prelude::*;

fn exponential_errors(op: &OperatorSpectrum, x: &[f64], eps: f64, lambda: f64, t_end: f64) -> (Vec<f64>, Vec<f64>) {
    let psi = Nonlinearity::new(PsiKind::Identity).unwrap();
    let noise = NoiseModel::silent();
    let path = sample_noise_path(&noise, t_end, 0).unwrap();
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for j in 4..=9 {
        let h = 0.5f64.powi(j);
        let cfg = StepConfig::new(&psi, h, eps, lambda).unwrap();
        let traj = solve_regularized_path(op, &psi, &noise, &path, &cfg, &op.field(x.to_vec()).unwrap()).unwrap();
        let err = traj
            .final_state()
            .iter()
            .zip(x)
            .zip(op.eigenvalues())
            .map(|((v, x0), mu)| (v - x0 * (-(eps + mu) * (1.0 + lambda) * t_end).exp()).powi(2))
            .sum::<f64>()
            .sqrt();
        hs.push(h);
        errs.push(err);
    }
    (hs, errs)
}

#[test]
fn single_mode_error_halves_with_the_step() {
    let op = OperatorSpectrum::from_eigenvalues(vec![2.0], None).unwrap();
    let (hs, errs) = exponential_errors(&op, &[1.0], 0.3, 0.1, 1.0);
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
    }
    let slope = log_log_slope(&hs, &errs).unwrap();
    assert!((slope - 1.0).abs() <= 0.15, "order {slope}");
}

#[test]
fn multi_mode_order_is_one() {
    let op = OperatorSpectrum::from_eigenvalues(vec![0.0, 1.0, 4.0, 9.0], None).unwrap();
    let (hs, errs) = exponential_errors(&op, &[1.0, 0.5, -0.25, 0.125], 0.1, 0.05, 1.0);
    let slope = log_log_slope(&hs, &errs).unwrap();
    assert!((slope - 1.0).abs() <= 0.15, "order {slope}");
}

#[test]
fn pure_jump_path_is_a_jump_sum() {
    let op = OperatorSpectrum::fractional_laplacian_torus(6, 0.5, 1.0).unwrap();
    let n = op.mode_count();
    let sigma = vec![
        (0..n).map(|k| 0.3 / (1.0 + k as f64)).collect::<Vec<f64>>(),
        (0..n).map(|k| if k % 2 == 0 { -0.2 } else { 0.1 }).collect(),
    ];
    let nu = [3.0, 1.5];
    let noise = NoiseModel::new(vec!["a".into(), "b".into()], nu.to_vec(), JumpCoefficient::Additive(sigma.clone())).unwrap();
    let psi = Nonlinearity::new(PsiKind::Zero).unwrap();
    let x: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
    for seed in 0..20 {
        let path = sample_noise_path(&noise, 2.0, path_seed(11, seed)).unwrap();
        let cfg = StepConfig::new(&psi, 0.05, 0.1, 0.0).unwrap();
        let traj = solve_regularized_path(&op, &psi, &noise, &path, &cfg, &op.field(x.clone()).unwrap()).unwrap();
        for (t, state) in traj.times.iter().zip(&traj.states) {
            for k in 0..n {
                let jumps: f64 = path.jumps_in(0.0, *t).map(|j| sigma[j.mark][k]).sum();
                let exact = x[k] + jumps - t * (nu[0] * sigma[0][k] + nu[1] * sigma[1][k]);
                assert!((state[k] - exact).abs() <= 1e-10, "t = {t}, mode {k}: {} vs {exact}", state[k]);
            }
        }
    }
}

#[test]
fn left_limits_are_recorded_at_every_jump() {
    let op = OperatorSpectrum::from_eigenvalues(vec![0.0, 5.0], None).unwrap();
    let noise = NoiseModel::new(vec!["z".into()], vec![5.0], JumpCoefficient::Additive(vec![vec![1.0, 1.0]])).unwrap();
    let psi = Nonlinearity::new(PsiKind::Identity).unwrap();
    let path = NoisePath {
        jumps: vec![Jump { time: 0.123, mark: 0 }, Jump { time: 0.5, mark: 0 }],
        seed: 0,
        horizon: 1.0,
    };
    let cfg = StepConfig::new(&psi, 0.1, 0.5, 0.1).unwrap();
    let traj = solve_regularized_path(&op, &psi, &noise, &path, &cfg, &op.field(vec![1.0, 1.0]).unwrap()).unwrap();
    for jump in &path.jumps {
        let i = traj.times.iter().position(|&t| t == jump.time).expect("grid hits the jump");
        let left = traj.left_limits[i].as_ref().expect("left limit");
        assert!((traj.states[i][0] - left[0] - 1.0).abs() < 1e-14);
    }
}

fn random_config() -> impl Strategy<Value = (PsiKind, f64, f64, f64)> {
    (
        prop::sample::select(PsiKind::shipped()),
        prop::sample::select(vec![0.001, 0.01, 0.1]),
        0.01f64..=1.0,
        0.0f64..0.5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn implicit_step_is_nonexpansive(
        (kind, h, eps, lambda) in random_config(),
        b1 in prop::collection::vec(-5.0f64..5.0, 17),
        b2 in prop::collection::vec(-5.0f64..5.0, 17),
    ) {
        let op = OperatorSpectrum::fractional_laplacian_torus(8, 1.0, 1.0).unwrap();
        let psi = Nonlinearity::new(kind).unwrap();
        let mut cfg = StepConfig::new(&psi, h, eps, lambda).unwrap();
        cfg.inner_tolerance = 1e-13;
        cfg.max_inner_iterations = 20_000;
        let u1 = implicit_step(&op, &psi, &cfg, &op.field(b1.clone()).unwrap()).unwrap();
        let u2 = implicit_step(&op, &psi, &cfg, &op.field(b2.clone()).unwrap()).unwrap();
        let kind = NormKind::F12Star(eps);
        let du = distance_sq_coefficients(&op, u1.coefficients(), u2.coefficients(), kind).sqrt();
        let db = distance_sq_coefficients(&op, &b1, &b2, kind).sqrt();
        // each solve is accurate to the residual tolerance, measured in the same norm
        prop_assert!(du <= db + 4e-13, "{du} > {db}");
    }

    #[test]
    fn deterministic_energy_decays(
        kind in prop::sample::select(vec![PsiKind::Identity, PsiKind::ScaledLinear { a: 2.5 }, PsiKind::SoftMonotone]),
        eps in 0.01f64..=1.0,
        lambda in 0.0f64..0.3,
        x in prop::collection::vec(-3.0f64..3.0, 9),
    ) {
        let op = OperatorSpectrum::fractional_laplacian_torus(4, 0.8, 1.0).unwrap();
        let psi = Nonlinearity::new(kind).unwrap();
        let noise = NoiseModel::silent();
        let path = sample_noise_path(&noise, 0.5, 0).unwrap();
        let cfg = StepConfig::new(&psi, 0.02, eps, lambda).unwrap();
        let traj = solve_regularized_path(&op, &psi, &noise, &path, &cfg, &op.field(x).unwrap()).unwrap();
        let energy: Vec<f64> = traj.states.iter().map(|s| norm_sq_coefficients(&op, s, NormKind::F12Star(eps)).sqrt()).collect();
        for w in energy.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{} > {}", w[1], w[0]);
        }
    }
}
