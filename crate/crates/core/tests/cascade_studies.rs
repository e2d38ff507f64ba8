use levy_pme::cascade::{
    apriori_bound_check, coupled_differences, eps_cauchy_study, lambda_cauchy_study, perturbation, uniqueness_check, SolverSettings,
    StudyPlan,
};
use levy_pme::noise::{path_seed, sample_noise_path};
use levy_pme::spaces::norm_sq_coefficients;
use levy_pme::stepper::solve_regularized_path;
use levy_pme::{ContractionMap, JumpCoefficient, NoiseModel, Nonlinearity, NormKind, OperatorSpectrum, PsiKind, StepConfig};

fn plan(op: OperatorSpectrum, psi: PsiKind, noise: NoiseModel, x: Vec<f64>, h: f64, paths: usize) -> StudyPlan {
    StudyPlan {
        x: op.field(x).unwrap(),
        psi: Nonlinearity::new(psi).unwrap(),
        noise,
        lambda_ladder: vec![0.2, 0.1, 0.05, 0.025],
        epsilon_ladder: vec![0.2, 0.1, 0.05, 0.025],
        paths,
        h,
        horizon: 1.0,
        master_seed: 8,
        solver: SolverSettings::default(),
        op,
    }
}

fn multiplicative() -> NoiseModel {
    NoiseModel::new(
        vec!["z".into()],
        vec![3.0],
        JumpCoefficient::Multiplicative { sigma: vec![0.3], map: ContractionMap::Semigroup { tau: 0.05 } },
    )
    .unwrap()
}

/// `sup_{t <= 1} x^2 (e^{-a t} - e^{-b t})^2 / (1 + mu)`
fn exponential_gap(x: f64, mu: f64, a: f64, b: f64) -> f64 {
    let t = ((a / b).ln() / (a - b)).min(1.0);
    x * x * ((-a * t).exp() - (-b * t).exp()).powi(2) / (1.0 + mu)
}

#[test]
fn identical_cells_have_zero_difference() {
    let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
    let n = op.mode_count();
    let p = plan(op, PsiKind::SoftMonotone, multiplicative(), vec![0.5; n], 0.02, 4);
    for row in coupled_differences(&p, &[(0.2, 0.1), (0.2, 0.1)]).unwrap() {
        assert_eq!(row, vec![0.0]);
    }
}

#[test]
fn linear_lambda_differences_match_the_exponentials() {
    let mu = 1.0;
    let op = OperatorSpectrum::from_eigenvalues(vec![mu], None).unwrap();
    let p = plan(op, PsiKind::Identity, NoiseModel::silent(), vec![1.0], 1e-4, 2);
    let eps = 0.2;
    let report = lambda_cauchy_study(&p, eps).unwrap();
    for pair in &report.pairs {
        let want = exponential_gap(1.0, mu, (eps + mu) * (1.0 + pair.first), (eps + mu) * (1.0 + pair.second));
        let rel = (pair.sup_sq.mean - want).abs() / want;
        assert!(rel < 1e-2, "lambda pair ({}, {}): {} vs {want}", pair.first, pair.second, pair.sup_sq.mean);
    }
}

#[test]
fn linear_eps_differences_match_the_exponentials() {
    let mu = 2.0;
    let op = OperatorSpectrum::from_eigenvalues(vec![mu], None).unwrap();
    let p = plan(op, PsiKind::Identity, NoiseModel::silent(), vec![1.0], 1e-4, 2);
    let lambda = *p.lambda_ladder.last().unwrap();
    let report = eps_cauchy_study(&p).unwrap();
    for pair in &report.pairs {
        let want = exponential_gap(1.0, mu, (pair.first + mu) * (1.0 + lambda), (pair.second + mu) * (1.0 + lambda));
        let rel = (pair.sup_sq.mean - want).abs() / want;
        assert!(rel < 1e-2, "eps pair ({}, {}): {} vs {want}", pair.first, pair.second, pair.sup_sq.mean);
    }
}

#[test]
fn two_point_ladder_reports_no_slope() {
    let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
    let n = op.mode_count();
    let mut p = plan(op, PsiKind::Identity, multiplicative(), vec![1.0; n], 0.05, 4);
    p.lambda_ladder = vec![0.2, 0.1];
    let report = lambda_cauchy_study(&p, 0.2).unwrap();
    assert!(report.slope.is_none());
    assert!(!report.notes.is_empty());
}

#[test]
fn apriori_trivial_and_linear_cases() {
    let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
    let n = op.mode_count();
    let zero = plan(op.clone(), PsiKind::Identity, NoiseModel::silent(), vec![0.0; n], 0.01, 4);
    let e = apriori_bound_check(&zero, 0.1, 0.05).unwrap();
    assert_eq!(e.lhs.mean, 0.0);
    assert_eq!(e.derived_passed, Some(true));

    let x: Vec<f64> = (0..n).map(|k| 1.0 / (1.0 + k as f64)).collect();
    let x_sq = norm_sq_coefficients(&op, &x, NormKind::L2);
    let decay = plan(op, PsiKind::Identity, NoiseModel::silent(), x, 0.01, 4);
    let e = apriori_bound_check(&decay, 0.1, 0.05).unwrap();
    // without noise the sup is attained at t = 0
    assert!((e.sup_l2_sq.mean - x_sq).abs() < 1e-12 * x_sq);
    assert!((e.derived_bound.unwrap() - 2.0 * x_sq).abs() < 1e-12 * x_sq);
    assert!(e.integral_term.mean > 0.0);
    assert_eq!(e.derived_passed, Some(true));
}

#[test]
fn additive_noise_difference_decays_deterministically() {
    let op = OperatorSpectrum::fractional_laplacian_torus(5, 1.0, 1.0).unwrap();
    let n = op.mode_count();
    let noise = NoiseModel::new(vec!["k".into()], vec![4.0], JumpCoefficient::Additive(vec![vec![0.3; n]])).unwrap();
    let psi = Nonlinearity::new(PsiKind::Identity).unwrap();
    let (eps, lambda, h) = (0.1, 0.05, 1e-3);
    let cfg = StepConfig::new(&psi, h, eps, lambda).unwrap();
    let x: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
    let delta = perturbation(&op, 1e-2);
    let x2: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
    let path = sample_noise_path(&noise, 1.0, path_seed(1, 0)).unwrap();
    assert!(!path.jumps.is_empty());
    let a = solve_regularized_path(&op, &psi, &noise, &path, &cfg, &op.field(x).unwrap()).unwrap();
    let b = solve_regularized_path(&op, &psi, &noise, &path, &cfg, &op.field(x2).unwrap()).unwrap();
    let t = *a.times.last().unwrap();
    for k in 0..n {
        let rate = (eps + op.eigenvalues()[k]) * (1.0 + lambda);
        let got = b.final_state()[k] - a.final_state()[k];
        // discrete product over the merged grid, exact up to the solver tolerance
        let mut discrete = delta[k];
        for w in a.times.windows(2) {
            discrete /= 1.0 + (w[1] - w[0]) * rate;
        }
        assert!((got - discrete).abs() < 1e-10, "mode {k}");
        let continuum = delta[k] * (-rate * t).exp();
        assert!((got - continuum).abs() <= 1e-2 * delta[k].abs() + 1e-12, "mode {k}: {got} vs {continuum}");
    }
}

#[test]
fn different_seeds_give_different_trajectories() {
    let op = OperatorSpectrum::fractional_laplacian_torus(4, 1.0, 1.0).unwrap();
    let n = op.mode_count();
    let mut p = plan(op, PsiKind::SoftMonotone, multiplicative(), vec![1.0; n], 0.02, 3);
    let a = p.simulate_cell(0.2, 0.1).unwrap();
    p.master_seed += 1;
    let b = p.simulate_cell(0.2, 0.1).unwrap();
    assert_ne!(a[0].final_state(), b[0].final_state());
}

#[test]
fn uniqueness_holds_for_a_nonlinear_plan() {
    let op = OperatorSpectrum::fractional_laplacian_torus(8, 1.0, 1.0).unwrap();
    let n = op.mode_count();
    let x: Vec<f64> = (0..n).map(|k| 1.0 / (1.0 + k as f64)).collect();
    let p = plan(op, PsiKind::Saturating { cap: 0.5 }, multiplicative(), x, 0.02, 8);
    let report = uniqueness_check(&p, 0.1).unwrap();
    assert!(report.passed(), "{:?}", report.failures());
    let u = report.uniqueness.unwrap();
    assert!(u.solver_sup_distance <= 10.0 * u.inner_tolerance);
}
