pub(crate) mod bc;
pub(crate) mod exact;
pub(crate) mod hitting;
pub(crate) mod induced;
pub(crate) mod rotation;
pub(crate) mod sums;
pub(crate) mod symbolic;

use std::collections::BTreeMap;

use ergolab::dynamics::CheckpointSchedule;
use ergolab::estimators::{ensemble_aggregate, loglog_slope, median, EnsembleStats, ScalingReport};
use ergolab::processes::ProcessTrace;

use crate::config::ExperimentConfig;
use crate::registry::find;

pub(crate) fn schedule(cfg: &ExperimentConfig) -> anyhow::Result<CheckpointSchedule> {
    Ok(CheckpointSchedule::geometric(cfg.f64("ratio")?, cfg.u64("n_max")?)?)
}

/// The part of `trace` at checkpoints `>= from`.
pub(crate) fn trace_from(trace: &ProcessTrace, from: u64) -> ProcessTrace {
    let (n, v): (Vec<u64>, Vec<f64>) =
        trace.checkpoints().iter().zip(trace.values()).filter(|(&n, _)| n >= from).map(|(&n, &v)| (n, v)).unzip();
    ProcessTrace::from_parts(trace.kind(), n, v).expect("a subsequence of a valid trace is valid")
}

/// Per-orbit exponent estimate.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Sample {
    pub slope: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Sample {
    pub const NAN: Sample = Sample { slope: f64::NAN, stderr: f64::NAN, lo: f64::NAN, hi: f64::NAN };
}

/// Slope over the top `fraction` of checkpoints plus the tail extremes of
/// `log value / log n` over the same window.
pub(crate) fn slope_sample(trace: &ProcessTrace, fraction: f64) -> Sample {
    let Ok(fit) = loglog_slope(trace, fraction) else { return Sample::NAN };
    let r: Vec<f64> = trace
        .checkpoints()
        .iter()
        .zip(trace.values())
        .filter(|(&n, _)| n >= fit.window.0 && n > 1)
        .map(|(&n, &v)| v.ln() / (n as f64).ln())
        .collect();
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Sample { slope: fit.slope, stderr: fit.stderr, lo, hi }
}

/// Report whose headline is the ensemble median of the per-orbit slopes,
/// passing when it lies within `tol` of `predicted`.
pub(crate) fn slope_report(
    experiment: &str,
    metric: impl Into<String>,
    samples: &[Sample],
    predicted: f64,
    tol: f64,
) -> anyhow::Result<ScalingReport> {
    let slopes: Vec<f64> = samples.iter().map(|s| s.slope).collect();
    let stats = ensemble_aggregate(&slopes, |s| (s - predicted).abs() <= tol)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("median_fit_stderr".into(), median(&samples.iter().map(|s| s.stderr).collect::<Vec<_>>()));
    let pass = (stats.median - predicted).abs() <= tol;
    Ok(ScalingReport {
        experiment: experiment.into(),
        metric: metric.into(),
        fitted_slope: stats.median,
        stderr: stats.stderr_median,
        tail_lo: median(&samples.iter().map(|s| s.lo).collect::<Vec<_>>()),
        tail_hi: median(&samples.iter().map(|s| s.hi).collect::<Vec<_>>()),
        predicted: Some(predicted),
        tolerance: format!("median within {tol} of {predicted}"),
        ensemble: stats,
        citation: citation(experiment),
        pass,
        diagnostics,
    })
}

/// Report on a per-orbit statistic whose pass rule is "at least `need` of
/// the orbits satisfy `ok`".
#[allow(clippy::too_many_arguments)]
pub(crate) fn fraction_report(
    experiment: &str,
    metric: impl Into<String>,
    values: &[f64],
    lo_hi: (f64, f64),
    predicted: Option<f64>,
    rule: impl Into<String>,
    need: f64,
    ok: impl Fn(usize) -> bool,
) -> anyhow::Result<ScalingReport> {
    let flags: Vec<bool> = (0..values.len()).map(&ok).collect();
    let mut stats = ensemble_aggregate(values, |_| true)?;
    stats.pass_fraction = flags.iter().filter(|&&f| f).count() as f64 / values.len() as f64;
    let rule = rule.into();
    Ok(ScalingReport {
        experiment: experiment.into(),
        metric: metric.into(),
        fitted_slope: stats.median,
        stderr: stats.stderr_median,
        tail_lo: lo_hi.0,
        tail_hi: lo_hi.1,
        predicted,
        tolerance: format!("{rule} for at least {:.0}% of orbits", 100.0 * need),
        pass: stats.pass_fraction >= need,
        ensemble: stats,
        citation: citation(experiment),
        diagnostics: BTreeMap::new(),
    })
}

/// Report passing when the ensemble median of `values` lies in `[lo, hi]`.
pub(crate) fn median_report(
    experiment: &str,
    metric: impl Into<String>,
    values: &[f64],
    (lo, hi): (f64, f64),
) -> anyhow::Result<ScalingReport> {
    let stats = ensemble_aggregate(values, |v| (lo..=hi).contains(&v))?;
    Ok(ScalingReport {
        experiment: experiment.into(),
        metric: metric.into(),
        fitted_slope: stats.median,
        stderr: stats.stderr_median,
        tail_lo: f64::NAN,
        tail_hi: f64::NAN,
        predicted: None,
        tolerance: format!("median in [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&stats.median),
        ensemble: stats,
        citation: citation(experiment),
        diagnostics: BTreeMap::new(),
    })
}

/// Stats of a single deterministic value.
pub(crate) fn single(v: f64) -> EnsembleStats {
    EnsembleStats {
        n: 1,
        n_finite: usize::from(v.is_finite()),
        median: v,
        q1: v,
        q3: v,
        iqr: 0.0,
        stderr_median: 0.0,
        pass_fraction: f64::NAN,
        values: vec![v],
    }
}

pub(crate) fn citation(experiment: &str) -> String {
    find(experiment).map_or_else(String::new, |e| e.citation.to_owned())
}

/// Formats a float key for trace names: `0.8` -> `0.8`, `2.0` -> `2`.
pub(crate) fn tag(x: f64) -> String {
    format!("{x}")
}
