use anyhow::bail;
use ergolab::dynamics::{CheckpointSchedule, MapSpec, Orbit, Point};
use ergolab::estimators::{hitting_indicators, median, ols, quantile, HittingIndicators};
use ergolab::observables::{DistanceOn, ObservableSpec};
use ergolab::processes::{HittingMonitor, HittingRecord, HittingTargets, ProcessTrace, TraceKind};
use ergolab::rng::DigitStream;

use super::{fraction_report, schedule, tag};
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Ctx, Outcome, TraceSet};

pub(crate) const LOGLAW_DEFAULTS: &str = r#"
n_max = 100_000_000
ratio = 1.2
ensemble = 100
seed = 4
alphas = [1.0, 2.0]
center = 0.8
log2_r_max = 5
log2_r_min = 18
per_octave = 2
tol_exponent = 0.2
"#;

pub(crate) const TENT_DEFAULTS: &str = r#"
n_max = 100_000_000
ratio = 1.2
ensemble = 50
seed = 6
u_min = 5.0
u_max = 18.0
u_step = 0.5
tol_log_factor = 10.0
tol_fraction = 0.9
"#;

/// Hitting times as a trace over the target index, for CSV output.
fn record_trace(record: &HittingRecord) -> ProcessTrace {
    let (n, v): (Vec<u64>, Vec<f64>) =
        record.times.iter().enumerate().map(|(i, t)| (i as u64, t.map_or(f64::NAN, |t| t as f64))).unzip();
    ProcessTrace::from_parts(TraceKind::Series, n, v).expect("indices increase")
}

fn hit(targets: HittingTargets, sched: &CheckpointSchedule, orbit: &mut Orbit) -> anyhow::Result<HittingRecord> {
    let mut mon = HittingMonitor::new(targets, 1)?;
    orbit.run(sched, &mut mon)?;
    Ok(mon.record())
}

pub(crate) fn loglaw(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let center = cfg.f64("center")?;
    let (hi, lo) = (cfg.u64("log2_r_max")?, cfg.u64("log2_r_min")?);
    let per = cfg.u64("per_octave")?;
    let tol = cfg.f64("tol_exponent")?;
    if !(center > 0.5 && center < 1.0) {
        bail!("center {center} must lie in (1/2, 1)");
    }
    if lo <= hi || per == 0 {
        bail!("need log2_r_min > log2_r_max and per_octave >= 1");
    }
    let radii: Vec<f64> = (hi * per..=lo * per).map(|j| (-(j as f64) / per as f64).exp2()).collect();
    let mut out = Outcome::default();
    for (v, &alpha) in cfg.f64_list("alphas")?.iter().enumerate() {
        let map = MapSpec::lsv(alpha)?;
        let predicted = alpha.max(1.0);
        let records = ctx.ensemble(cfg.usize("ensemble")?, |i| {
            let mut orbit = Orbit::random(&map, &[], orbit_seed(cfg.u64("seed")?, v as u64, i))?;
            let targets = HittingTargets::Balls { center: Point::interval(center), on: DistanceOn::Base, radii: radii.clone() };
            hit(targets, &sched, &mut orbit)
        })?;
        let ind: Vec<Option<HittingIndicators>> = records.iter().map(|r| hitting_indicators(r, 0.25).ok()).collect();
        let slopes: Vec<f64> = ind.iter().map(|i| i.map_or(f64::NAN, |i| i.slope)).collect();
        let pick = |f: fn(&HittingIndicators) -> f64| median(&ind.iter().flatten().map(f).collect::<Vec<_>>());
        let mut report = fraction_report(
            "loglaw",
            format!("alpha = {alpha}: slope of log tau_r against -log r"),
            &slopes,
            (pick(|i| i.lower), pick(|i| i.upper)),
            Some(predicted),
            format!("within {tol} of {predicted}"),
            0.0,
            |i| (slopes[i] - predicted).abs() <= tol,
        )?;
        report.pass = (report.fitted_slope - predicted).abs() <= tol;
        report.tolerance = format!("median within {tol} of {predicted}");
        report.diagnostics.insert("median_resolved_radii".into(), pick(|i| i.resolved as f64));
        report.diagnostics.insert("median_fit_stderr".into(), pick(|i| i.stderr));
        if let Some(e) = median_tau_exponent(&records) {
            report.diagnostics.insert("median_tau_exponent".into(), e);
        }
        out.reports.push(report);
        out.traces.push(TraceSet::new(format!("hitting_times_alpha={}", tag(alpha)), records.iter().map(record_trace)));
    }
    Ok(out)
}

/// Slope of `log median_i tau_r` against `-log r` over the radii that at
/// least half of the orbits resolved; censored times count as infinite, so
/// the median is unaffected by the horizon there.
fn median_tau_exponent(records: &[HittingRecord]) -> Option<f64> {
    let first = records.first()?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (j, &r) in first.targets.iter().enumerate() {
        let mut t: Vec<f64> = records.iter().map(|rec| rec.times[j].map_or(f64::INFINITY, |t| t as f64)).collect();
        t.sort_by(f64::total_cmp);
        let m = quantile(&t, 0.5);
        if m.is_finite() && m >= 1.0 {
            xs.push(-r.ln());
            ys.push(m.ln());
        }
    }
    (xs.len() >= 3).then(|| ols(&xs, &ys).slope)
}

pub(crate) fn tent_hit(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let (u0, u1, du) = (cfg.f64("u_min")?, cfg.f64("u_max")?, cfg.f64("u_step")?);
    let factor = cfg.f64("tol_log_factor")?;
    if !(u0 > 1.0 && u1 > u0 && du > 0.0) {
        bail!("need 1 < u_min < u_max and u_step > 0");
    }
    let steps = ((u1 - u0) / du + 1e-9).floor() as usize;
    let levels: Vec<f64> = (0..=steps).map(|j| u0 + j as f64 * du).collect();
    let seed = cfg.u64("seed")?;
    let records = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        let target = DigitStream::from_seed(orbit_seed(seed, 1, i)).uniform();
        let observable = ObservableSpec::neg_log_dist(Point::interval(target), DistanceOn::Base);
        let mut orbit = Orbit::random(&MapSpec::Tent, &[], orbit_seed(seed, 0, i))?;
        hit(HittingTargets::Levels { observable, levels: levels.clone() }, &sched, &mut orbit)
    })?;
    // worst |log tau_u - u| / log u over resolved levels
    let worst: Vec<f64> = records
        .iter()
        .map(|r| {
            r.resolved()
                .map(|(u, t)| ((t as f64).ln() - u).abs() / u.ln())
                .fold(f64::NAN, f64::max)
        })
        .collect();
    let resolved: Vec<f64> = records.iter().map(|r| r.resolved_count() as f64).collect();
    let mut report = fraction_report(
        "tent-hit",
        format!("max over resolved u in [{u0}, {u1}] of |log tau_u - u| / log u"),
        &worst,
        (f64::NAN, f64::NAN),
        None,
        format!("at most {factor}"),
        cfg.f64("tol_fraction")?,
        |i| worst[i] <= factor,
    )?;
    report.diagnostics.insert("median_resolved_levels".into(), median(&resolved));
    report.diagnostics.insert("levels".into(), levels.len() as f64);
    let mut out = Outcome::default();
    out.reports.push(report);
    out.traces.push(TraceSet::new("hitting_times", records.iter().map(record_trace)));
    Ok(out)
}
