//! Experiment description files (TOML).
//!
//! Every table and key is optional except `[operator]`; omitted keys take
//! the defaults listed in the README and are echoed back when the scenario
//! is serialized. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{SolverSettings, StudyPlan};
use crate::error::{Error, Result};
use crate::noise::{ContractionMap, JumpCoefficient, NoiseModel};
use crate::psi::{Nonlinearity, PsiKind};
use crate::spectral::{Field, OperatorSpectrum};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub operator: OperatorSpec,
    #[serde(default = "default_psi")]
    pub psi: PsiKind,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub study: StudySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub inequalities: InequalitySpec,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn default_psi() -> PsiKind {
    PsiKind::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Fractional Laplacian `-(-Δ)^alpha` on a periodic interval.
    Torus {
        mode_cutoff: usize,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        length: f64,
    },
    /// Diagonal spectrum read from a `label,eigenvalue` table; relative
    /// paths are resolved against the scenario file.
    Eigenvalues { file: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub marks: Vec<String>,
    #[serde(default)]
    pub intensities: Vec<f64>,
    #[serde(default)]
    pub coefficient: CoefficientSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    #[default]
    Zero,
    /// One coefficient list per mark, zero-padded to the mode count.
    Additive { amplitudes: Vec<Vec<f64>> },
    Multiplicative {
        sigma: Vec<f64>,
        #[serde(default)]
        map: MapSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    #[default]
    Identity,
    Semigroup { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `c_j = amplitude / (1 + j)^2` in mode order.
    Smooth { amplitude: f64 },
    /// Leading coefficients, zero-padded.
    Coefficients { values: Vec<f64> },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Smooth { amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySpec {
    /// fixed eps for simulate, lambda-study, apriori and uniqueness
    pub epsilon: f64,
    /// lambda for simulate
    pub lambda: f64,
    pub lambda_ladder: Vec<f64>,
    pub epsilon_ladder: Vec<f64>,
    pub paths: usize,
    pub h: f64,
    pub horizon: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            lambda: 0.025,
            lambda_ladder: vec![0.2, 0.1, 0.05, 0.025],
            epsilon_ladder: vec![0.2, 0.1, 0.05, 0.025],
            paths: 64,
            h: 0.01,
            horizon: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub inner_tolerance: f64,
    pub max_inner_iterations: usize,
    pub acceleration_depth: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            inner_tolerance: s.inner_tolerance,
            max_inner_iterations: s.max_inner_iterations,
            acceleration_depth: s.acceleration_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySpec {
    pub samples: usize,
    pub epsilons: Vec<f64>,
    /// sampling interval for scalar Psi checks
    pub range: [f64; 2],
}

impl Default for InequalitySpec {
    fn default() -> Self {
        Self {
            samples: 10_000,
            epsilons: vec![0.01, 0.1, 0.5],
            range: [-50.0, 50.0],
        }
    }
}

fn range_error(key: &str, value: impl std::fmt::Display, allowed: &str) -> Error {
    Error::Config(format!("`{key}` = {value} is out of range: must lie in {allowed}"))
}

fn check_open_unit(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(range_error(key, v, "(0, 1)"))
    }
}

impl Scenario {
    /// Parses and validates; relative file references resolve against `base`.
    pub fn parse_str(text: &str, base: &Path) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_owned(),
            }
        })?;
        scenario.validate(base)?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The normalized form: every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the normalized form, hex encoded.
    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self, base: &Path) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        match &self.operator {
            OperatorSpec::Torus {
                mode_cutoff,
                alpha,
                length,
            } => {
                if !(1..=2048).contains(mode_cutoff) {
                    return Err(range_error("operator.mode_cutoff", mode_cutoff, "[1, 2048]"));
                }
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(range_error("operator.alpha", alpha, "(0, 1]"));
                }
                if !(*length > 0.0 && length.is_finite()) {
                    return Err(range_error("operator.length", length, "(0, inf)"));
                }
            }
            OperatorSpec::Eigenvalues { file } => {
                let p = base.join(file);
                if !p.is_file() {
                    return Err(Error::Config(format!("`operator.file`: {} does not exist", p.display())));
                }
            }
        }
        Nonlinearity::new(self.psi).map_err(|e| Error::Config(format!("`psi`: {e}")))?;

        let n = &self.noise;
        if n.intensities.len() != n.marks.len() {
            return Err(Error::Config(format!(
                "`noise.intensities` has {} entries for {} marks",
                n.intensities.len(),
                n.marks.len()
            )));
        }
        if let Some(v) = n.intensities.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(range_error("noise.intensities", v, "[0, inf)"));
        }
        match &n.coefficient {
            CoefficientSpec::Zero => {}
            CoefficientSpec::Additive { amplitudes } => {
                if amplitudes.len() != n.marks.len() {
                    return Err(Error::Config(format!(
                        "`noise.coefficient.amplitudes` has {} rows for {} marks",
                        amplitudes.len(),
                        n.marks.len()
                    )));
                }
            }
            CoefficientSpec::Multiplicative { sigma, map } => {
                if sigma.len() != n.marks.len() {
                    return Err(Error::Config(format!(
                        "`noise.coefficient.sigma` has {} entries for {} marks",
                        sigma.len(),
                        n.marks.len()
                    )));
                }
                if let MapSpec::Semigroup { tau } = map {
                    if !(*tau >= 0.0 && tau.is_finite()) {
                        return Err(range_error("noise.coefficient.map.tau", tau, "[0, inf)"));
                    }
                }
            }
        }

        let s = &self.study;
        check_open_unit("study.epsilon", s.epsilon)?;
        if !(s.lambda >= 0.0 && s.lambda < 1.0) {
            return Err(range_error("study.lambda", s.lambda, "[0, 1)"));
        }
        for (key, ladder) in [("study.lambda_ladder", &s.lambda_ladder), ("study.epsilon_ladder", &s.epsilon_ladder)] {
            if ladder.len() < 2 {
                return Err(Error::Config(format!("`{key}` needs at least 2 values, got {}", ladder.len())));
            }
            for &v in ladder.iter() {
                check_open_unit(key, v)?;
            }
            if ladder.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config(format!("`{key}` must be strictly decreasing")));
            }
        }
        if s.paths < 2 {
            return Err(range_error("study.paths", s.paths, "[2, inf)"));
        }
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return Err(range_error("study.horizon", s.horizon, "(0, inf)"));
        }
        if !(s.h > 0.0 && s.h <= s.horizon) {
            return Err(range_error("study.h", s.h, "(0, horizon]"));
        }

        let v = &self.solver;
        if !(v.inner_tolerance > 0.0 && v.inner_tolerance.is_finite()) {
            return Err(range_error("solver.inner_tolerance", v.inner_tolerance, "(0, inf)"));
        }
        if v.max_inner_iterations == 0 {
            return Err(range_error("solver.max_inner_iterations", 0, "[1, inf)"));
        }

        let q = &self.inequalities;
        if q.samples == 0 {
            return Err(range_error("inequalities.samples", 0, "[1, inf)"));
        }
        for &e in &q.epsilons {
            check_open_unit("inequalities.epsilons", e)?;
        }
        if !(q.range[0] < q.range[1]) {
            return Err(Error::Config("`inequalities.range` must be an increasing pair".into()));
        }
        Ok(())
    }

    pub fn build_operator(&self, base: &Path) -> Result<OperatorSpectrum> {
        match &self.operator {
            OperatorSpec::Torus {
                mode_cutoff,
                alpha,
                length,
            } => OperatorSpectrum::fractional_laplacian_torus(*mode_cutoff, *alpha, *length),
            OperatorSpec::Eigenvalues { file } => OperatorSpectrum::read_table_file(&base.join(file)),
        }
    }

    pub fn build_noise(&self, op: &OperatorSpectrum) -> Result<NoiseModel> {
        let n = &self.noise;
        let coefficient = match &n.coefficient {
            CoefficientSpec::Zero => JumpCoefficient::Zero,
            CoefficientSpec::Additive { amplitudes } => {
                let mut rows = Vec::with_capacity(amplitudes.len());
                for (i, a) in amplitudes.iter().enumerate() {
                    rows.push(pad(a, op.mode_count(), &format!("noise.coefficient.amplitudes[{i}]"))?);
                }
                JumpCoefficient::Additive(rows)
            }
            CoefficientSpec::Multiplicative { sigma, map } => JumpCoefficient::Multiplicative {
                sigma: sigma.clone(),
                map: match *map {
                    MapSpec::Identity => ContractionMap::Identity,
                    MapSpec::Semigroup { tau } => ContractionMap::Semigroup { tau },
                },
            },
        };
        NoiseModel::new(n.marks.clone(), n.intensities.clone(), coefficient)
    }

    pub fn build_initial(&self, op: &OperatorSpectrum) -> Result<Field> {
        let c = match &self.initial {
            InitialSpec::Smooth { amplitude } => (0..op.mode_count()).map(|j| amplitude / ((1 + j) as f64).powi(2)).collect(),
            InitialSpec::Coefficients { values } => pad(values, op.mode_count(), "initial.values")?,
        };
        op.field(c)
    }

    /// Assembles the study plan; `paths` and `h` override the file values.
    pub fn build_plan(&self, base: &Path, seed: u64, paths: Option<usize>, h: Option<f64>) -> Result<StudyPlan> {
        let op = self.build_operator(base)?;
        let noise = self.build_noise(&op)?;
        let x = self.build_initial(&op)?;
        let s = &self.study;
        let plan = StudyPlan {
            psi: Nonlinearity::new(self.psi)?,
            noise,
            x,
            lambda_ladder: s.lambda_ladder.clone(),
            epsilon_ladder: s.epsilon_ladder.clone(),
            paths: paths.unwrap_or(s.paths),
            h: h.unwrap_or(s.h),
            horizon: s.horizon,
            master_seed: seed,
            solver: SolverSettings {
                inner_tolerance: self.solver.inner_tolerance,
                max_inner_iterations: self.solver.max_inner_iterations,
                acceleration_depth: self.solver.acceleration_depth,
            },
            op,
        };
        plan.validate()?;
        Ok(plan)
    }
}

fn pad(values: &[f64], n: usize, key: &str) -> Result<Vec<f64>> {
    if values.len() > n {
        return Err(Error::Config(format!("`{key}` has {} entries but the operator has {n} modes", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(range_error(key, v, "finite values"));
    }
    let mut out = values.to_vec();
    out.resize(n, 0.0);
    Ok(out)
}
