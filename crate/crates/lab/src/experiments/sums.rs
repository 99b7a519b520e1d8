use std::sync::Arc;

use anyhow::{bail, Context};
use ergolab::dynamics::{CheckpointSchedule, InducedMode, InducedOrbit, InducedSystem, MapSpec, Orbit, Point};
use ergolab::estimators::{ensemble_aggregate, loglog_slope, median};
use ergolab::observables::{lsv_alpha_phi, DistanceOn, ObservableSpec};
use ergolab::processes::{aaronson_diagnostic, BirkhoffMaxMonitor, ProcessTrace, TraceKind};
use ergolab::rng::{DigitStream, OrbitSeed};

use super::{citation, schedule, slope_report, slope_sample, tag, Sample};
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Ctx, Outcome, TraceSet};

pub(crate) const SPDC_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 100
seed = 1
maps = ["doubling", "tent"]
center = 0.3183098861837907
k = 2.0
window = 0.25
tol_slope = 0.25
"#;

pub(crate) const MAXIMA_INT_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 100
seed = 5
alpha = 2.0
centers = [0.0, 0.8]
k = 1.0
window = 0.25
tol_slope = 0.12
"#;

pub(crate) const AARONSON_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 100
seed = 5
alpha = 2.0
center = 0.8
k = 1.0
eps = 0.1
n_from = 10_000
n_to = 10_000_000
return_time_exponent = 0.4
return_time_from = 1_000
return_time_to = 1_000_000
ff_depth = 1024
tol_decrease = 10.0
tol_fraction = 0.9
tol_return_time_fraction = 0.9
"#;

/// Index of the `0.8` entry in maxima-int's default centers; the
/// diagnostic reruns exactly those orbits.
const MAXIMA_INT_VARIANT: u64 = 1;

fn base_map(name: &str) -> anyhow::Result<MapSpec> {
    Ok(match name {
        "doubling" => MapSpec::Doubling,
        "tent" => MapSpec::Tent,
        other => bail!("unsupported map `{other}` (expected doubling or tent)"),
    })
}

fn sums_orbit(map: &MapSpec, phi: &ObservableSpec, sched: &CheckpointSchedule, seed: OrbitSeed) -> anyhow::Result<(ProcessTrace, ProcessTrace)> {
    let mut orbit = Orbit::random(map, &[], seed)?;
    let mut mon = BirkhoffMaxMonitor::new(phi.clone());
    orbit.run(sched, &mut mon)?;
    Ok(mon.into_traces())
}

pub(crate) fn spdc_sums(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let center = cfg.f64("center")?;
    let k = cfg.f64("k")?;
    let window = cfg.f64("window")?;
    let tol = cfg.f64("tol_slope")?;
    if k < 1.0 {
        bail!("k = {k}: the observable must be non-integrable (k >= 1)");
    }
    // Lebesgue is invariant for both maps, so the local dimension is 1
    let predicted = k;
    let phi = ObservableSpec::dist_power(Point::interval(center), k, DistanceOn::Base).with_alpha_phi(1.0 / k);
    let mut out = Outcome::default();
    for (v, name) in cfg.str_list("maps")?.iter().enumerate() {
        let map = base_map(name)?;
        let runs = ctx.ensemble(cfg.usize("ensemble")?, |i| sums_orbit(&map, &phi, &sched, orbit_seed(cfg.u64("seed")?, v as u64, i)))?;
        let s: Vec<Sample> = runs.iter().map(|(s, _)| slope_sample(s, window)).collect();
        let m: Vec<Sample> = runs.iter().map(|(_, m)| slope_sample(m, window)).collect();
        out.reports.push(slope_report("spdc-sums", format!("{name}: slope of log S_n"), &s, predicted, tol)?);
        out.reports.push(slope_report("spdc-sums", format!("{name}: slope of log M_n"), &m, predicted, tol)?);
        let (st, mt): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
        out.traces.push(TraceSet::new(format!("sums_{name}"), st));
        out.traces.push(TraceSet::new(format!("maxima_{name}"), mt));
    }
    Ok(out)
}

fn lsv_phi(alpha: f64, center: f64, k: f64) -> ObservableSpec {
    let phi = ObservableSpec::dist_power(Point::interval(center), k, DistanceOn::Base);
    match lsv_alpha_phi(alpha, center, k) {
        Some(a) => phi.with_alpha_phi(a),
        None => phi,
    }
}

pub(crate) fn maxima_int(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let alpha = cfg.f64("alpha")?;
    let k = cfg.f64("k")?;
    let window = cfg.f64("window")?;
    let tol = cfg.f64("tol_slope")?;
    if alpha < 1.0 {
        bail!("alpha = {alpha}: maxima-int covers the infinite-measure range alpha >= 1");
    }
    let map = MapSpec::lsv(alpha)?;
    let predicted = k / alpha;
    let mut out = Outcome::default();
    for (v, &center) in cfg.f64_list("centers")?.iter().enumerate() {
        let phi = lsv_phi(alpha, center, k);
        let runs = ctx.ensemble(cfg.usize("ensemble")?, |i| sums_orbit(&map, &phi, &sched, orbit_seed(cfg.u64("seed")?, v as u64, i)))?;
        let m: Vec<Sample> = runs.iter().map(|(_, m)| slope_sample(m, window)).collect();
        let s: Vec<Sample> = runs.iter().map(|(s, _)| slope_sample(s, window)).collect();
        let mut report = slope_report("maxima-int", format!("x0 = {center}: slope of log M_n"), &m, predicted, tol)?;
        let s_report = slope_report("maxima-int", "", &s, predicted, tol)?;
        report.diagnostics.insert("median_sum_slope".into(), s_report.fitted_slope);
        if let Some(slope) = median_trace_slope(runs.iter().map(|(_, m)| m), window) {
            report.diagnostics.insert("slope_of_median_maximum".into(), slope);
        }
        out.reports.push(report);
        let (st, mt): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
        out.traces.push(TraceSet::new(format!("sums_x0={}", tag(center)), st));
        out.traces.push(TraceSet::new(format!("maxima_x0={}", tag(center)), mt));
    }
    Ok(out)
}

/// Log-log slope of the checkpoint-wise ensemble median of `traces`.
fn median_trace_slope<'a>(traces: impl Iterator<Item = &'a ProcessTrace>, window: f64) -> Option<f64> {
    let traces: Vec<&ProcessTrace> = traces.collect();
    let ns = traces.first()?.checkpoints().to_vec();
    let values = (0..ns.len()).map(|j| median(&traces.iter().map(|t| t.values()[j]).collect::<Vec<_>>())).collect();
    let trace = ProcessTrace::from_parts(TraceKind::Series, ns, values).ok()?;
    loglog_slope(&trace, window).ok().map(|f| f.slope)
}

/// Schedule of `cfg` with extra checkpoints inserted.
fn with_points(sched: &CheckpointSchedule, extra: &[u64]) -> anyhow::Result<CheckpointSchedule> {
    let mut pts = sched.points().to_vec();
    pts.extend(extra.iter().copied().filter(|&n| n <= sched.n_max()));
    pts.sort_unstable();
    pts.dedup();
    Ok(CheckpointSchedule::explicit(pts)?)
}

fn decrease(ratio: &ProcessTrace, from: u64, to: u64) -> f64 {
    match (ratio.value_at(from), ratio.value_at(to)) {
        (Some(a), Some(b)) if b > 0.0 => a / b,
        _ => f64::NAN,
    }
}

fn induced_sums(sys: &InducedSystem, depth: u64, sched: &CheckpointSchedule, seed: OrbitSeed) -> anyhow::Result<ProcessTrace> {
    let mut digits = DigitStream::from_seed(seed);
    let y0 = 0.5 + 0.5 * digits.uniform();
    let mut orbit = InducedOrbit::new(sys, y0, InducedMode::FastForward { depth })?;
    let mut trace = ProcessTrace::new(TraceKind::BirkhoffSum);
    let mut k = 0u64;
    let mut sum = 0.0;
    for &n in sched.points() {
        while k < n {
            sum += orbit.advance()?.1 as f64;
            k += 1;
        }
        trace.push(n, sum);
    }
    Ok(trace)
}

pub(crate) fn aaronson(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let alpha = cfg.f64("alpha")?;
    let center = cfg.f64("center")?;
    let k = cfg.f64("k")?;
    let eps = cfg.f64("eps")?;
    let seed = cfg.u64("seed")?;
    let (from, to) = (cfg.u64("n_from")?, cfg.u64("n_to")?);
    let need_decrease = cfg.f64("tol_decrease")?;
    let need = cfg.f64("tol_fraction")?;
    let alpha_phi = lsv_alpha_phi(alpha, center, k).context("center must lie away from the neutral point")?;
    if !(alpha_phi > eps && eps > 0.0) {
        bail!("need alpha_phi = {alpha_phi} > eps = {eps} > 0");
    }
    let mut out = Outcome::default();

    let sched = with_points(&schedule(cfg)?, &[from, to])?;
    let map = MapSpec::lsv(alpha)?;
    let phi = lsv_phi(alpha, center, k);
    let ratios = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        let (s, _) = sums_orbit(&map, &phi, &sched, orbit_seed(seed, MAXIMA_INT_VARIANT, i))?;
        Ok(aaronson_diagnostic(&s, alpha_phi, eps)?)
    })?;
    let factors: Vec<f64> = ratios.iter().map(|r| decrease(r, from, to)).collect();
    let mut report = super::fraction_report(
        "aaronson-diagnostic",
        format!("x0 = {center}: decrease of S_n^{} / n from n = {from} to {to}", alpha_phi - eps),
        &factors,
        (f64::NAN, f64::NAN),
        None,
        format!("decrease by at least {need_decrease}x"),
        need,
        |i| factors[i] >= need_decrease,
    )?;
    report.diagnostics.insert("alpha_phi".into(), alpha_phi);
    out.reports.push(report);
    out.traces.push(TraceSet::new(format!("ratio_x0={}", tag(center)), ratios));

    let e = cfg.f64("return_time_exponent")?;
    let (rf, rt) = (cfg.u64("return_time_from")?, cfg.u64("return_time_to")?);
    let need_rt = cfg.f64("tol_return_time_fraction")?;
    let sys = Arc::new(InducedSystem::with_depth(alpha, cfg.usize("ff_depth")?)?);
    let rsched = with_points(&CheckpointSchedule::geometric(cfg.f64("ratio")?, rt)?, &[rf, rt])?;
    let depth = cfg.u64("ff_depth")?;
    let rt_ratios = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        let s = induced_sums(&sys, depth, &rsched, orbit_seed(seed, 100, i))?;
        Ok(aaronson_diagnostic(&s, 1.0 / alpha, 1.0 / alpha - e)?)
    })?;
    let rt_factors: Vec<f64> = rt_ratios.iter().map(|r| decrease(r, rf, rt)).collect();
    let stats = ensemble_aggregate(&rt_factors, |f| f > 1.0)?;
    out.reports.push(ergolab::estimators::ScalingReport {
        experiment: "aaronson-diagnostic".into(),
        metric: format!("return times: S_k^{e} / k at k = {rt} below its value at k = {rf}"),
        fitted_slope: stats.median,
        stderr: stats.stderr_median,
        tail_lo: f64::NAN,
        tail_hi: f64::NAN,
        predicted: None,
        tolerance: format!("ratio decreases for at least {:.0}% of orbits", 100.0 * need_rt),
        pass: stats.pass_fraction >= need_rt,
        ensemble: stats,
        citation: citation("aaronson-diagnostic"),
        diagnostics: Default::default(),
    });
    out.traces.push(TraceSet::new("ratio_return_times", rt_ratios));
    Ok(out)
}
