//! Subcommand dispatch shared by the `levy-pme` binary and the tests.
//!
//! Each run writes into the output directory:
//!
//! * `report.json`: schema version, software version, scenario hash, seed,
//!   the normalized scenario and the study result. Deterministic.
//! * `<command>.csv`: flat numeric table. Deterministic.
//! * `metadata.json`: wall-clock timestamp and worker count, the only
//!   nondeterministic artifact.
//! * `failure.json`: present only when the exit status is nonzero.
//!
//! Exit status: 0 when all asserted properties hold, 1 on a property
//! failure, 2 on usage or configuration errors, 3 on numerical failures.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::cascade::{apriori_study, eps_cauchy_study, lambda_cauchy_study, uniqueness_check, Check, StudyPlan, StudyReport, SCHEMA_VERSION, SEED_RULE};
use crate::error::Error;
use crate::estimates::check_variational_conditions;
use crate::noise::{audit_coefficient, path_seed, JumpCoefficient};
use crate::psi::verify_psi_inequalities;
use crate::scenario::Scenario;
use crate::spaces::{norm_sq_coefficients, NormKind};
use crate::stepper::TrajectoryMeta;

pub const WORKERS_ENV: &str = "LEVY_PME_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    LambdaStudy,
    EpsStudy,
    Apriori,
    Uniqueness,
    Inequalities,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::LambdaStudy => "lambda-study",
            Command::EpsStudy => "eps-study",
            Command::Apriori => "apriori",
            Command::Uniqueness => "uniqueness",
            Command::Inequalities => "inequalities",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
    pub paths: Option<usize>,
    pub step: Option<f64>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: String,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Violation { .. } => EXIT_PROPERTY,
        Error::SolverDivergence { .. } | Error::SolverAt { .. } | Error::Quadrature { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn failure_kind(code: i32) -> &'static str {
    match code {
        EXIT_PROPERTY => "property",
        EXIT_NUMERIC => "numeric",
        _ => "configuration",
    }
}

/// Result of a subcommand before it is written out.
struct Artifacts {
    result: serde_json::Value,
    table_name: String,
    table: Vec<u8>,
    checks: Vec<Check>,
}

impl Artifacts {
    fn from_report(cmd: Command, report: &StudyReport) -> Result<Self, Error> {
        let mut table = Vec::new();
        report.table.write_csv(&mut table)?;
        Ok(Self {
            result: serde_json::to_value(report).map_err(|e| Error::Config(e.to_string()))?,
            table_name: format!("{}.csv", cmd.name()),
            table,
            checks: report.checks.clone(),
        })
    }
}

/// Runs one subcommand and writes its artifacts. Never panics on bad input.
pub fn run(cmd: Command, opts: &RunOptions) -> Outcome {
    let outcome = match execute(cmd, opts) {
        Ok(artifacts) => {
            let failed: Vec<&Check> = artifacts.checks.iter().filter(|c| !c.passed).collect();
            if failed.is_empty() {
                Outcome {
                    exit_code: EXIT_OK,
                    message: format!("{}: all {} checks passed", cmd.name(), artifacts.checks.len()),
                }
            } else {
                let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
                let o = Outcome {
                    exit_code: EXIT_PROPERTY,
                    message: format!("{}: failed checks: {}", cmd.name(), names.join(", ")),
                };
                write_failure(&opts.out, cmd, &o, &failed);
                o
            }
        }
        Err(err) => {
            let o = Outcome {
                exit_code: exit_code_for(&err),
                message: format!("{}: {err}", cmd.name()),
            };
            write_failure(&opts.out, cmd, &o, &[]);
            o
        }
    };
    outcome
}

fn write_failure(out: &Path, cmd: Command, o: &Outcome, failed: &[&Check]) {
    let doc = json!({
        "command": cmd.name(),
        "exit_code": o.exit_code,
        "kind": failure_kind(o.exit_code),
        "message": o.message,
        "failed_checks": failed,
    });
    // best effort: the output directory itself may be the problem
    if fs::create_dir_all(out).is_ok() {
        let _ = fs::write(out.join("failure.json"), serde_json::to_string_pretty(&doc).unwrap_or_default());
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn execute(cmd: Command, opts: &RunOptions) -> Result<Artifacts, Error> {
    let scenario = Scenario::from_file(&opts.scenario)?;
    let base = opts.scenario.parent().unwrap_or(Path::new(".")).to_path_buf();
    let plan = scenario.build_plan(&base, opts.seed, opts.paths, opts.step)?;
    fs::create_dir_all(&opts.out).map_err(|e| Error::Config(format!("cannot create {}: {e}", opts.out.display())))?;
    // stale failure summaries from earlier runs would be misleading
    let _ = fs::remove_file(opts.out.join("failure.json"));

    let eps = scenario.study.epsilon;
    let artifacts = match cmd {
        Command::Simulate => simulate(&scenario, &plan, &opts.out)?,
        Command::LambdaStudy => Artifacts::from_report(cmd, &lambda_cauchy_study(&plan, eps)?)?,
        Command::EpsStudy => Artifacts::from_report(cmd, &eps_cauchy_study(&plan)?)?,
        Command::Apriori => Artifacts::from_report(cmd, &apriori_study(&plan, eps)?)?,
        Command::Uniqueness => Artifacts::from_report(cmd, &uniqueness_check(&plan, eps)?)?,
        Command::Inequalities => inequalities(&scenario, &plan)?,
    };

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "software": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "seed": opts.seed,
        "seed_rule": SEED_RULE,
        "paths": plan.paths,
        "h": plan.h,
        "scenario_sha256": scenario.sha256(),
        "scenario": scenario.to_toml(),
        "passed": artifacts.checks.iter().all(|c| c.passed),
        "checks": artifacts.checks,
        "result": artifacts.result,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&opts.out.join("report.json"), text.as_bytes())?;
    write_file(&opts.out.join(&artifacts.table_name), &artifacts.table)?;

    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({ "generated_at_unix": stamp, "workers": rayon::current_num_threads() });
    write_file(&opts.out.join("metadata.json"), meta.to_string().as_bytes())?;
    Ok(artifacts)
}

/// Growth rate of a linear `Psi`, when the scenario has one.
fn linear_slope(plan: &StudyPlan) -> Option<f64> {
    (plan.psi.min_slope() == plan.psi.lipschitz()).then_some(plan.psi.lipschitz())
}

#[derive(Serialize)]
struct PathSummary {
    path: usize,
    jumps: usize,
    inner_iterations: usize,
    final_norm_l2: f64,
    final_norm_f12star: f64,
    sup_l2_sq: f64,
}

fn simulate(scenario: &Scenario, plan: &StudyPlan, out: &Path) -> Result<Artifacts, Error> {
    let (eps, lambda) = (scenario.study.epsilon, scenario.study.lambda);
    let cfg = plan.step_config(eps, lambda)?;
    let paths = plan.noise_paths()?;
    let trajs = plan.simulate_cell(eps, lambda)?;
    let op = &plan.op;

    let tdir = out.join("trajectories");
    let ndir = out.join("noise");
    for d in [&tdir, &ndir] {
        fs::create_dir_all(d).map_err(|e| Error::Config(format!("cannot create {}: {e}", d.display())))?;
    }
    let mut summaries = Vec::with_capacity(trajs.len());
    let mut table = b"path,jumps,inner_iterations,final_norm_L2,final_norm_F12star,sup_L2_sq\n".to_vec();
    for (i, (traj, path)) in trajs.iter().zip(&paths).enumerate() {
        let meta = TrajectoryMeta {
            epsilon: eps,
            lambda,
            h: plan.h,
            seed: path_seed(plan.master_seed, i as u64),
        };
        let mut w = BufWriter::new(fs::File::create(tdir.join(format!("path_{i:04}.csv")))?);
        traj.write_table(op, &meta, &mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(fs::File::create(ndir.join(format!("path_{i:04}.csv")))?);
        path.write_table(&plan.noise, &mut w)?;
        w.flush()?;

        let last = traj.final_state();
        let s = PathSummary {
            path: i,
            jumps: path.jumps.len(),
            inner_iterations: traj.inner_iterations,
            final_norm_l2: norm_sq_coefficients(op, last, NormKind::L2).sqrt(),
            final_norm_f12star: norm_sq_coefficients(op, last, NormKind::F12_DUAL).sqrt(),
            sup_l2_sq: traj.sup_of(|c| norm_sq_coefficients(op, c, NormKind::L2)),
        };
        writeln!(
            table,
            "{},{},{},{:.17e},{:.17e},{:.17e}",
            s.path, s.jumps, s.inner_iterations, s.final_norm_l2, s.final_norm_f12star, s.sup_l2_sq
        )?;
        summaries.push(s);
    }

    let mut checks = vec![Check {
        name: "finite trajectories".into(),
        passed: trajs.iter().all(|t| t.states.iter().flatten().all(|v| v.is_finite())),
        detail: format!("{} paths", trajs.len()),
    }];
    let mut oracle = serde_json::Value::Null;
    if let (JumpCoefficient::Zero, Some(a)) = (plan.noise.coefficient(), linear_slope(plan)) {
        // backward Euler on a linear diagonal equation has an exact product form
        let traj = &trajs[0];
        let x = plan.x.coefficients();
        let mut worst_discrete: f64 = 0.0;
        let mut worst_continuum: f64 = 0.0;
        let scale = norm_sq_coefficients(op, x, NormKind::L2).sqrt().max(f64::MIN_POSITIVE);
        let rates: Vec<f64> = op.eigenvalues().iter().map(|mu| (eps + mu) * (a + lambda)).collect();
        let mut discrete = x.to_vec();
        for i in 1..traj.times.len() {
            let dt = traj.times[i] - traj.times[i - 1];
            for (d, r) in discrete.iter_mut().zip(&rates) {
                *d /= 1.0 + dt * r;
            }
            let t = traj.times[i];
            let mut ed: f64 = 0.0;
            let mut ec: f64 = 0.0;
            for k in 0..x.len() {
                ed += (traj.states[i][k] - discrete[k]).powi(2);
                ec += (traj.states[i][k] - x[k] * (-rates[k] * t).exp()).powi(2);
            }
            worst_discrete = worst_discrete.max(ed.sqrt() / scale);
            worst_continuum = worst_continuum.max(ec.sqrt() / scale);
        }
        checks.push(Check {
            name: "linear oracle".into(),
            passed: worst_discrete <= 1e-10,
            detail: format!(
                "relative deviation from the exact backward Euler product {worst_discrete:.3e}; \
                 from the exponential solution {worst_continuum:.3e} (time discretization)"
            ),
        });
        oracle = json!({ "discrete_relative_error": worst_discrete, "continuum_relative_error": worst_continuum });
    }

    Ok(Artifacts {
        result: json!({
            "epsilon": eps,
            "lambda": lambda,
            "h": plan.h,
            "horizon": plan.horizon,
            "step": cfg,
            "paths": summaries,
            "oracle": oracle,
        }),
        table_name: "simulate.csv".into(),
        table,
        checks,
    })
}

fn inequalities(scenario: &Scenario, plan: &StudyPlan) -> Result<Artifacts, Error> {
    let q = &scenario.inequalities;
    let seed = plan.master_seed;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut record = |name: &str, eps: f64, res: Result<f64, Error>| -> Result<(), Error> {
        match res {
            Ok(slack) => {
                rows.push(format!("{name},{eps:.17e},{slack:.17e},1"));
                checks.push(Check {
                    name: name.to_owned(),
                    passed: true,
                    detail: format!("worst slack {slack:.3e}"),
                });
                Ok(())
            }
            Err(Error::Violation { name: what, slack, witness }) => {
                rows.push(format!("{name},{eps:.17e},{slack:.17e},0"));
                checks.push(Check {
                    name: name.to_owned(),
                    passed: false,
                    detail: format!("{what} violated at {witness}"),
                });
                Ok(())
            }
            Err(e) => Err(e),
        }
    };

    let psi = verify_psi_inequalities(&plan.psi, q.samples, (q.range[0], q.range[1]), seed);
    let psi_json = psi.as_ref().ok().map(|r| serde_json::to_value(r).unwrap_or_default());
    record("psi cocoercivity", f64::NAN, psi.as_ref().map(|r| r.cocoercive_slack.min(r.pointwise_slack)).map_err(clone_violation))?;

    let audit = audit_coefficient(&plan.noise, &plan.op, q.samples, path_seed(seed, 1));
    let audit_json = audit.as_ref().ok().map(|r| serde_json::to_value(r).unwrap_or_default());
    record("jump coefficient growth and Lipschitz", f64::NAN, audit.as_ref().map(|a| a.growth_slack.min(a.lipschitz_slack)).map_err(clone_violation))?;

    let mut variational = Vec::new();
    for (j, &eps) in q.epsilons.iter().enumerate() {
        let rep = check_variational_conditions(&plan.op, &plan.psi, &plan.noise, eps, q.samples, path_seed(seed, 2 + j as u64));
        let slack = rep.as_ref().map(|r| {
            let mut s = r.monotonicity_slack.min(r.growth_slack).min(r.hemicontinuity_slack);
            if let Some(c) = r.coercivity_slack {
                s = s.min(c);
            }
            s
        });
        record("variational conditions", eps, slack.map_err(clone_violation))?;
        if let Ok(r) = rep {
            variational.push(serde_json::to_value(r).unwrap_or_default());
        }
    }

    let mut table = b"check,epsilon,worst_slack,passed\n".to_vec();
    for r in &rows {
        writeln!(table, "{r}")?;
    }
    Ok(Artifacts {
        result: json!({ "psi": psi_json, "coefficient": audit_json, "variational": variational }),
        table_name: "inequalities.csv".into(),
        table,
        checks,
    })
}

fn clone_violation(e: &Error) -> Error {
    match e {
        Error::Violation { name, slack, witness } => Error::Violation {
            name,
            slack: *slack,
            witness: witness.clone(),
        },
        other => Error::Config(other.to_string()),
    }
}
