//! Log-log slopes, tail ratios, inversion of monotone bounds and ensemble
//! summaries.

use crate::error::{Error, Result};
use crate::processes::{HittingRecord, ProcessTrace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ols {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; `NaN` with fewer than three points.
    pub stderr: f64,
}

/// # Panics
/// Panics if the inputs differ in length or have fewer than two points.
pub fn ols(xs: &[f64], ys: &[f64]) -> Ols {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need two points for a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ols { slope, intercept, stderr }
}

/// Least-squares slope of `log value` against `log n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    /// First and last checkpoint used.
    pub window: (u64, u64),
    pub points: usize,
}

/// Slope over the last `window_fraction` of the checkpoints (at least 8).
///
/// Checkpoints with non-positive values are skipped.
pub fn loglog_slope(trace: &ProcessTrace, window_fraction: f64) -> Result<SlopeFit> {
    let pts: Vec<(u64, f64)> = trace
        .checkpoints()
        .iter()
        .zip(trace.values())
        .filter(|(&n, &v)| n >= 1 && v > 0.0 && v.is_finite())
        .map(|(&n, &v)| (n, v))
        .collect();
    let take = ((pts.len() as f64 * window_fraction).ceil() as usize).max(8);
    if pts.len() < 8 || take > pts.len() {
        return Err(Error::Insufficient(format!("{} usable checkpoints, need 8 in the window", pts.len())));
    }
    let tail = &pts[pts.len() - take..];
    let xs: Vec<f64> = tail.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, v)| v.ln()).collect();
    let fit = ols(&xs, &ys);
    Ok(SlopeFit { slope: fit.slope, stderr: fit.stderr, window: (tail[0].0, tail[take - 1].0), points: take })
}

/// `log value / log n` at each checkpoint with `n >= 2` and positive value.
pub fn log_ratio_sequence(trace: &ProcessTrace) -> Vec<(u64, f64)> {
    trace
        .checkpoints()
        .iter()
        .zip(trace.values())
        .filter(|(&n, &v)| n >= 2 && v > 0.0)
        .map(|(&n, &v)| (n, v.ln() / (n as f64).ln()))
        .collect()
}

/// Minimum and maximum over the last `fraction` of a ratio sequence.
///
/// # Errors
/// Fewer than 12 entries, or a window of fewer than 3.
pub fn tail_liminf_limsup(seq: &[f64], fraction: f64) -> Result<(f64, f64)> {
    if seq.len() < 12 {
        return Err(Error::Insufficient(format!("{} checkpoints, need 12", seq.len())));
    }
    let take = (seq.len() as f64 * fraction).ceil() as usize;
    if take < 3 {
        return Err(Error::Insufficient(format!("tail window of {take} entries")));
    }
    let tail = &seq[seq.len() - take..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// A strictly increasing function given on a grid, evaluated as
/// `g(u + offset)` where `g` interpolates the grid log-log when all values
/// are positive (exact for power laws) and linearly otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFn {
    xs: Vec<f64>,
    ys: Vec<f64>,
    offset: f64,
}

impl TabulatedFn {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Insufficient("a tabulated function needs two matching grids".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotone("tabulated bound must be strictly increasing".into()));
        }
        Ok(TabulatedFn { xs, ys, offset: 0.0 })
    }

    pub fn from_fn(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0] - self.offset, self.xs[self.xs.len() - 1] - self.offset)
    }

    /// Value at `u`; extrapolates from the end segments outside the grid.
    pub fn eval(&self, u: f64) -> f64 {
        let x = u + self.offset;
        let n = self.xs.len();
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1, y0, y1) = (self.xs[i - 1], self.xs[i], self.ys[i - 1], self.ys[i]);
        if x0 > 0.0 && y0 > 0.0 && x > 0.0 {
            let t = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
            (y0.ln() + t * (y1.ln() - y0.ln())).exp()
        } else {
            y0 + (x - x0) / (x1 - x0) * (y1 - y0)
        }
    }
}

/// `u -> l^{-1}(u + shift)` for a strictly increasing tabulated `l`.
///
/// Used to turn almost-sure bounds `l1(n) <= M_n <= l2(n)` into hitting-time
/// bounds `l2^{-1}(u - 1) <= tau_u <= l1^{-1}(u + 1)`.
pub fn invert_monotone_bound(bound: &TabulatedFn, shift: f64) -> Result<TabulatedFn> {
    if bound.offset != 0.0 {
        return Err(Error::Parameter("invert the original bound, not an inverse".into()));
    }
    Ok(TabulatedFn { xs: bound.ys.clone(), ys: bound.xs.clone(), offset: shift })
}

/// Hitting-time indicators from a record of nested balls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingIndicators {
    /// Tail maximum of `log tau_r / -log r`.
    pub upper: f64,
    /// Tail minimum of `log tau_r / -log r`.
    pub lower: f64,
    /// Least-squares slope of `log tau_r` against `-log r` over resolved radii.
    pub slope: f64,
    pub stderr: f64,
    pub resolved: usize,
}

/// # Errors
/// Fewer than 10 resolved radii with `tau >= 1`.
pub fn hitting_indicators(record: &HittingRecord, fraction: f64) -> Result<HittingIndicators> {
    let pts: Vec<(f64, f64)> = record
        .resolved()
        .filter(|&(r, t)| t >= 1 && r > 0.0 && r < 1.0)
        .map(|(r, t)| (-r.ln(), (t as f64).ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Insufficient(format!("{} resolved radii, need 10", pts.len())));
    }
    let take = ((pts.len() as f64 * fraction).ceil() as usize).clamp(3, pts.len());
    let ratios: Vec<f64> = pts[pts.len() - take..].iter().map(|(x, y)| y / x).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = ols(&xs, &ys);
    Ok(HittingIndicators {
        upper: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lower: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        slope: fit.slope,
        stderr: fit.stderr,
        resolved: pts.len(),
    })
}

/// First checkpoint with `d_n <= r`: the hitting time of the closed ball,
/// located to within one checkpoint ratio.
pub fn hitting_from_min_distance(trace: &ProcessTrace, r: f64) -> Option<u64> {
    trace.checkpoints().iter().zip(trace.values()).find(|(_, &d)| d <= r).map(|(&n, _)| n)
}

/// Summary of one statistic across an ensemble of orbits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n: usize,
    /// Orbits that produced a finite value.
    pub n_finite: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    /// Normal-approximation standard error of the median, `1.2533 * (IQR / 1.349) / sqrt(N)`.
    pub stderr_median: f64,
    /// Fraction of all orbits passing the predicate; non-finite values fail.
    pub pass_fraction: f64,
    pub values: Vec<f64>,
}

/// # Errors
/// Fewer than 20 values, or no finite value.
pub fn ensemble_aggregate(values: &[f64], pass: impl Fn(f64) -> bool) -> Result<EnsembleStats> {
    if values.len() < 20 {
        return Err(Error::Insufficient(format!("{} orbits, need 20", values.len())));
    }
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Insufficient("no orbit produced a finite value".into()));
    }
    finite.sort_by(f64::total_cmp);
    let q1 = quantile(&finite, 0.25);
    let median = quantile(&finite, 0.5);
    let q3 = quantile(&finite, 0.75);
    let iqr = q3 - q1;
    let passed = values.iter().filter(|v| v.is_finite() && pass(**v)).count();
    Ok(EnsembleStats {
        n: values.len(),
        n_finite: finite.len(),
        median,
        q1,
        q3,
        iqr,
        stderr_median: 1.2533 * (iqr / 1.349) / (finite.len() as f64).sqrt(),
        pass_fraction: passed as f64 / values.len() as f64,
        values: values.to_vec(),
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Headline result of one experiment metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub experiment: String,
    pub metric: String,
    /// Ensemble median of the per-orbit fitted exponent.
    pub fitted_slope: f64,
    pub stderr: f64,
    /// Ensemble medians of the tail minimum and maximum of the ratio sequence.
    pub tail_lo: f64,
    pub tail_hi: f64,
    pub predicted: Option<f64>,
    /// Human-readable pass rule with its tolerance.
    pub tolerance: String,
    pub ensemble: EnsembleStats,
    pub citation: String,
    pub pass: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

impl ScalingReport {
    /// Whether the fitted slope lies in `[tail_lo - 3 se, tail_hi + 3 se]`.
    ///
    /// Not guaranteed: a slope and a ratio window measure different things
    /// when the prefactor drifts, so this is reported rather than enforced.
    pub fn slope_within_tail(&self) -> bool {
        let se = if self.stderr.is_finite() { self.stderr } else { 0.0 };
        self.fitted_slope >= self.tail_lo - 3.0 * se && self.fitted_slope <= self.tail_hi + 3.0 * se
    }
}
