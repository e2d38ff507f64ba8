//! Small Monte Carlo statistics: sample moments, log-log fits, bootstrap
//! intervals and a Poisson goodness-of-fit test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, samples: n }
    }
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(Error::Config("a fit needs at least two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("degenerate abscissae in fit".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Slope of `log y` against `log x`; non-positive `y` entries are rejected.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if let Some(bad) = y.iter().chain(x).find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "log-log data",
            value: *bad,
            constraint: "must be positive",
        });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(ols(&lx, &ly)?.1)
}

/// Percentile bootstrap interval of a statistic over resampled path indices.
///
/// `stat` receives the resampled index list.
pub fn bootstrap_interval(
    n: usize,
    resamples: usize,
    level: f64,
    seed: u64,
    mut stat: impl FnMut(&[usize]) -> Option<f64>,
) -> Option<(f64, f64)> {
    if n == 0 || resamples == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..n);
        }
        if let Some(v) = stat(&idx) {
            if v.is_finite() {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (values.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
    };
    let tail = 0.5 * (1.0 - level);
    Some((q(tail), q(1.0 - tail)))
}

/// Pearson chi-square test of counts against `Poisson(mean)`.
///
/// Bins are `0..k` plus a tail bin, with `k` chosen so that every bin has an
/// expected count of at least 5. Returns the p-value.
pub fn poisson_chi_square(counts: &[usize], mean: f64) -> Result<f64> {
    let n = counts.len() as f64;
    let dist = Poisson::new(mean).map_err(|e| Error::Config(format!("poisson mean {mean}: {e}")))?;
    let mut edges = Vec::new();
    let mut cumulative = 0.0;
    let mut k = 0u64;
    loop {
        let p = dist.pmf(k);
        if n * (1.0 - cumulative - p) < 5.0 {
            break;
        }
        if n * p >= 5.0 {
            edges.push(k);
        }
        cumulative += p;
        k += 1;
        if k > 10_000 {
            break;
        }
    }
    // bins: values < edges[0] merged into the first bin, each edge up to the
    // next edge, and a tail bin
    if edges.len() < 2 {
        return Err(Error::Config("too few samples for a chi-square test".into()));
    }
    let bin_of = |c: u64| edges.iter().rposition(|&e| c >= e).unwrap_or(0);
    let bins = edges.len();
    let mut expected = vec![0.0; bins];
    for j in 0..k {
        expected[bin_of(j)] += n * dist.pmf(j);
    }
    let tail: f64 = n - expected.iter().sum::<f64>();
    expected[bins - 1] += tail;
    let mut observed = vec![0.0; bins];
    for &c in counts {
        observed[bin_of(c as u64)] += 1.0;
    }
    let chi: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (bins - 1) as f64;
    let chi_dist = ChiSquared::new(dof).map_err(|e| Error::Config(e.to_string()))?;
    Ok(1.0 - chi_dist.cdf(chi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_samples() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn estimate_standard_error() {
        // sample variance of 1..=4 is 5/3
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.std_error - (5.0 / 3.0 / 4.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn power_law_slope() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert!(log_log_slope(&x, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn bootstrap_contains_mean() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 7) as f64).collect();
        let mean = xs.iter().sum::<f64>() / 200.0;
        let (lo, hi) = bootstrap_interval(200, 500, 0.95, 3, |idx| Some(idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64)).unwrap();
        assert!(lo < mean && mean < hi);
    }

    #[test]
    fn chi_square_accepts_exact_frequencies() {
        // counts laid out in exact proportion to the pmf
        let dist = Poisson::new(3.0).unwrap();
        let mut counts = Vec::new();
        for k in 0..15u64 {
            let m = (10_000.0 * dist.pmf(k)).round() as usize;
            counts.extend(std::iter::repeat_n(k as usize, m));
        }
        assert!(poisson_chi_square(&counts, 3.0).unwrap() > 0.9);
        assert!(poisson_chi_square(&counts, 4.0).unwrap() < 1e-6);
    }
}
