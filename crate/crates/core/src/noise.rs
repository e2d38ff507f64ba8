//! Finite-activity Poisson random measures and jump coefficients.
//!
//! The mark space is a finite list with point-mass intensities `nu(z)`. A
//! [`NoisePath`] is one realization of the measure on `(0, T] x Z`; the
//! compensated measure subtracts `dt nu(dz)`.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::spaces::{norm_sq_coefficients, NormKind};
use crate::spectral::{Field, OperatorSpectrum};

/// Linear contraction `g` used by multiplicative coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum ContractionMap {
    Identity,
    /// `P_tau`
    Semigroup { tau: f64 },
}

impl ContractionMap {
    fn multiplier(&self, mu: f64) -> f64 {
        match *self {
            ContractionMap::Identity => 1.0,
            ContractionMap::Semigroup { tau } => (-tau * mu).exp(),
        }
    }

    /// Exact Lipschitz constant in any of the diagonal norms.
    pub fn lipschitz(&self, op: &OperatorSpectrum) -> f64 {
        op.eigenvalues()
            .iter()
            .map(|&mu| self.multiplier(mu))
            .fold(0.0, f64::max)
    }
}

/// The jump coefficient `f(u, z)`.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpCoefficient {
    Zero,
    /// `f(u, z) = sigma_z`, one coefficient vector per mark.
    Additive(Vec<Vec<f64>>),
    /// `f(u, z) = sigma_z g(u)`.
    Multiplicative { sigma: Vec<f64>, map: ContractionMap },
}

impl JumpCoefficient {
    pub fn name(&self) -> &'static str {
        match self {
            JumpCoefficient::Zero => "zero",
            JumpCoefficient::Additive(_) => "additive",
            JumpCoefficient::Multiplicative { .. } => "multiplicative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    marks: Vec<String>,
    intensities: Vec<f64>,
    coefficient: JumpCoefficient,
}

impl NoiseModel {
    pub fn new(marks: Vec<String>, intensities: Vec<f64>, coefficient: JumpCoefficient) -> Result<Self> {
        if marks.len() != intensities.len() {
            return Err(Error::DimensionMismatch {
                expected: marks.len(),
                found: intensities.len(),
            });
        }
        for &nu in &intensities {
            if !(nu >= 0.0 && nu.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "intensity",
                    value: nu,
                    constraint: "intensities must be finite and >= 0",
                });
            }
        }
        let per_mark = match &coefficient {
            JumpCoefficient::Zero => marks.len(),
            JumpCoefficient::Additive(s) => s.len(),
            JumpCoefficient::Multiplicative { sigma, map } => {
                if let ContractionMap::Semigroup { tau } = map {
                    if !(*tau >= 0.0) {
                        return Err(Error::InvalidParameter {
                            name: "tau",
                            value: *tau,
                            constraint: "must be >= 0",
                        });
                    }
                }
                sigma.len()
            }
        };
        if per_mark != marks.len() {
            return Err(Error::DimensionMismatch {
                expected: marks.len(),
                found: per_mark,
            });
        }
        Ok(Self {
            marks,
            intensities,
            coefficient,
        })
    }

    /// No marks at all.
    pub fn silent() -> Self {
        Self {
            marks: Vec::new(),
            intensities: Vec::new(),
            coefficient: JumpCoefficient::Zero,
        }
    }

    pub fn marks(&self) -> &[String] {
        &self.marks
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn coefficient(&self) -> &JumpCoefficient {
        &self.coefficient
    }

    pub fn total_intensity(&self) -> f64 {
        self.intensities.iter().sum()
    }

    pub fn check_compatible(&self, op: &OperatorSpectrum) -> Result<()> {
        if let JumpCoefficient::Additive(s) = &self.coefficient {
            for v in s {
                op.check_len(v.len())?;
            }
        }
        Ok(())
    }

    /// Adds `scale * f(u, z)` to `out`.
    pub fn add_jump(&self, op: &OperatorSpectrum, mark: usize, u: &[f64], scale: f64, out: &mut [f64]) {
        match &self.coefficient {
            JumpCoefficient::Zero => {}
            JumpCoefficient::Additive(s) => {
                for (o, v) in out.iter_mut().zip(&s[mark]) {
                    *o += scale * v;
                }
            }
            JumpCoefficient::Multiplicative { sigma, map } => {
                let a = scale * sigma[mark];
                for ((o, &c), &mu) in out.iter_mut().zip(u).zip(op.eigenvalues()) {
                    *o += a * map.multiplier(mu) * c;
                }
            }
        }
    }

    pub fn jump(&self, op: &OperatorSpectrum, mark: usize, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.add_jump(op, mark, u, 1.0, &mut out);
        out
    }

    /// Adds `scale * sum_z nu(z) f(u, z)` to `out`.
    pub fn add_compensator(&self, op: &OperatorSpectrum, u: &[f64], scale: f64, out: &mut [f64]) {
        for (z, &nu) in self.intensities.iter().enumerate() {
            if nu > 0.0 {
                self.add_jump(op, z, u, scale * nu, out);
            }
        }
    }

    /// `∫ ‖f(u, z)‖^2 nu(dz)` in the given norm.
    pub fn jump_energy(&self, op: &OperatorSpectrum, u: &[f64], kind: NormKind) -> f64 {
        (0..self.marks.len())
            .map(|z| self.intensities[z] * norm_sq_coefficients(op, &self.jump(op, z, u), kind))
            .sum()
    }

    /// `∫ ‖f(u1, z) - f(u2, z)‖^2 nu(dz)` in the given norm.
    pub fn jump_energy_difference(&self, op: &OperatorSpectrum, u1: &[f64], u2: &[f64], kind: NormKind) -> f64 {
        (0..self.marks.len())
            .map(|z| {
                let mut d = self.jump(op, z, u1);
                self.add_jump(op, z, u2, -1.0, &mut d);
                self.intensities[z] * norm_sq_coefficients(op, &d, kind)
            })
            .sum()
    }

    /// Closed-form `(C1, C2)` of the growth and Lipschitz conditions in the
    /// `F*_{1,2}` norm.
    pub fn closed_form_constants(&self, op: &OperatorSpectrum) -> (f64, f64) {
        match &self.coefficient {
            JumpCoefficient::Zero => (0.0, 0.0),
            JumpCoefficient::Additive(s) => {
                let c1 = s
                    .iter()
                    .zip(&self.intensities)
                    .map(|(v, nu)| nu * norm_sq_coefficients(op, v, NormKind::F12_DUAL))
                    .sum();
                (c1, 0.0)
            }
            JumpCoefficient::Multiplicative { sigma, map } => {
                let lip = map.lipschitz(op);
                let c: f64 = sigma.iter().zip(&self.intensities).map(|(s, nu)| s * s * nu).sum::<f64>() * lip * lip;
                (c, c)
            }
        }
    }

    /// Growth constant of the coefficient measured in `L^2`:
    /// `∫ |f(u, z)|_2^2 nu(dz) <= C (1 + |u|_2^2)`.
    pub fn growth_constant_l2(&self, op: &OperatorSpectrum) -> f64 {
        match &self.coefficient {
            JumpCoefficient::Zero => 0.0,
            JumpCoefficient::Additive(s) => s
                .iter()
                .zip(&self.intensities)
                .map(|(v, nu)| nu * norm_sq_coefficients(op, v, NormKind::L2))
                .sum(),
            JumpCoefficient::Multiplicative { .. } => self.closed_form_constants(op).0,
        }
    }
}

/// One jump of a realized path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub mark: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub jumps: Vec<Jump>,
    pub seed: u64,
    pub horizon: f64,
}

/// Per-path seed derived from the master seed; the fan-out rule quoted in
/// reports is `splitmix64(master ^ splitmix64(index))`.
pub fn path_seed(master_seed: u64, path_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(path_index))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws, for each mark, a Poisson(`nu(z) T`) number of jumps at uniform
/// times in `(0, T]`, then merges them in time order.
pub fn sample_noise_path(model: &NoiseModel, horizon: f64, seed: u64) -> Result<NoisePath> {
    ensure_positive("T", horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jumps = Vec::new();
    for (mark, &nu) in model.intensities.iter().enumerate() {
        let mean = nu * horizon;
        if mean <= 0.0 {
            continue;
        }
        let dist = Poisson::new(mean).map_err(|_| Error::InvalidParameter {
            name: "intensity",
            value: nu,
            constraint: "Poisson mean out of range",
        })?;
        let count = dist.sample(&mut rng) as usize;
        for _ in 0..count {
            let u: f64 = rng.random();
            jumps.push(Jump {
                time: horizon * (1.0 - u),
                mark,
            });
        }
    }
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.mark.cmp(&b.mark)));
    Ok(NoisePath { jumps, seed, horizon })
}

impl NoisePath {
    pub fn jumps_in(&self, start: f64, end: f64) -> impl Iterator<Item = &Jump> {
        self.jumps.iter().filter(move |j| j.time > start && j.time <= end)
    }

    pub fn count_by_mark(&self, marks: usize) -> Vec<usize> {
        let mut counts = vec![0; marks];
        for j in &self.jumps {
            counts[j.mark] += 1;
        }
        counts
    }

    /// Writes the path as a `time,mark` table preceded by a header.
    pub fn write_table(&self, model: &NoiseModel, mut out: impl Write) -> Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# horizon={:.17e}", self.horizon)?;
        writeln!(out, "time,mark")?;
        for j in &self.jumps {
            writeln!(out, "{:.17e},{}", j.time, model.marks[j.mark])?;
        }
        Ok(())
    }

    pub fn read_table(model: &NoiseModel, reader: impl BufRead) -> Result<Self> {
        let mut seed = None;
        let mut horizon = None;
        let mut jumps = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |message: String| Error::Parse { line: idx + 1, message };
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    match k.trim() {
                        "seed" => seed = Some(v.trim().parse::<u64>().map_err(|e| perr(e.to_string()))?),
                        "horizon" => horizon = Some(v.trim().parse::<f64>().map_err(|e| perr(e.to_string()))?),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line == "time,mark" {
                continue;
            }
            let (t, m) = line.split_once(',').ok_or_else(|| perr("expected `time,mark`".into()))?;
            let time: f64 = t.trim().parse().map_err(|_| perr(format!("bad time `{t}`")))?;
            let mark = model
                .marks
                .iter()
                .position(|name| name == m.trim())
                .ok_or_else(|| perr(format!("unknown mark `{}`", m.trim())))?;
            jumps.push(Jump { time, mark });
        }
        let horizon = horizon.ok_or_else(|| Error::Config("noise path header lacks horizon".into()))?;
        let path = NoisePath {
            jumps,
            seed: seed.ok_or_else(|| Error::Config("noise path header lacks seed".into()))?,
            horizon,
        };
        path.validate()?;
        Ok(path)
    }

    /// Times strictly increasing and inside `(0, T]`.
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0.0;
        for j in &self.jumps {
            if !(j.time > prev && j.time <= self.horizon) {
                return Err(Error::Config(format!(
                    "jump time {} not strictly increasing inside (0, {}]",
                    j.time, self.horizon
                )));
            }
            prev = j.time;
        }
        Ok(())
    }
}

/// `∫_s^t ∫_Z f(u, z) Ñ(dr, dz)` with `f` frozen at the supplied pre-state.
pub fn compensated_increment(
    op: &OperatorSpectrum,
    model: &NoiseModel,
    path: &NoisePath,
    u_pre: &Field,
    interval: (f64, f64),
) -> Result<Field> {
    let (s, t) = interval;
    if !(0.0 <= s && s < t && t <= path.horizon) {
        return Err(Error::Interval {
            start: s,
            end: t,
            horizon: path.horizon,
        });
    }
    op.check_len(u_pre.mode_count())?;
    model.check_compatible(op)?;
    let u = u_pre.coefficients();
    let mut out = vec![0.0; u.len()];
    for j in path.jumps_in(s, t) {
        model.add_jump(op, j.mark, u, 1.0, &mut out);
    }
    model.add_compensator(op, u, -(t - s), &mut out);
    op.field(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientAudit {
    pub coefficient: &'static str,
    /// closed-form growth constant
    pub c1: f64,
    /// closed-form Lipschitz constant
    pub c2: f64,
    /// tightest growth constant valid on the samples
    pub c1_sampled: f64,
    /// tightest Lipschitz constant valid on the samples
    pub c2_sampled: f64,
    pub growth_slack: f64,
    pub lipschitz_slack: f64,
    pub samples: usize,
}

/// Draws a field at `F*_{1,2}` unit scale: `c_k ~ N(0,1) (1 + mu_k)^{-1/2}`.
pub fn sample_dual_scale(op: &OperatorSpectrum, rng: &mut impl Rng, scale: f64) -> Vec<f64> {
    op.eigenvalues()
        .iter()
        .map(|&mu| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g / (1.0 + mu).sqrt()
        })
        .collect()
}

/// Checks the growth and Lipschitz conditions of the jump coefficient in
/// `F*_{1,2}` on random fields whose size spans four decades.
pub fn audit_coefficient(model: &NoiseModel, op: &OperatorSpectrum, sample_count: usize, seed: u64) -> Result<CoefficientAudit> {
    model.check_compatible(op)?;
    let (c1, c2) = model.closed_form_constants(op);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = NormKind::F12_DUAL;
    let mut c1_sampled: f64 = 0.0;
    let mut c2_sampled: f64 = 0.0;
    for _ in 0..sample_count {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let u1 = sample_dual_scale(op, &mut rng, scale);
        let u2 = sample_dual_scale(op, &mut rng, scale);

        let lhs = model.jump_energy(op, &u1, kind);
        let n1 = norm_sq_coefficients(op, &u1, kind);
        if lhs > c1 * (1.0 + n1) * (1.0 + 1e-12) {
            return Err(Error::Violation {
                name: "growth condition",
                slack: c1 * (1.0 + n1) - lhs,
                witness: format!("|u|_F* = {}", n1.sqrt()),
            });
        }
        c1_sampled = c1_sampled.max(lhs / (1.0 + n1));

        let dlhs = model.jump_energy_difference(op, &u1, &u2, kind);
        let dn: f64 = u1
            .iter()
            .zip(&u2)
            .zip(op.eigenvalues())
            .map(|((a, b), mu)| (a - b).powi(2) / (1.0 + mu))
            .sum();
        if dlhs > c2 * dn * (1.0 + 1e-12) {
            return Err(Error::Violation {
                name: "Lipschitz condition",
                slack: c2 * dn - dlhs,
                witness: format!("|u1 - u2|_F* = {}", dn.sqrt()),
            });
        }
        if dn > 0.0 {
            c2_sampled = c2_sampled.max(dlhs / dn);
        }
    }
    Ok(CoefficientAudit {
        coefficient: model.coefficient.name(),
        c1,
        c2,
        c1_sampled,
        c2_sampled,
        growth_slack: c1 - c1_sampled,
        lipschitz_slack: c2 - c2_sampled,
        samples: sample_count,
    })
}
