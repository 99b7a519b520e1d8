use anyhow::bail;
use ergolab::dynamics::{MapSpec, Orbit, Point};
use ergolab::observables::DistanceOn;
use ergolab::processes::{bc_series, BcCounter, ProcessTrace, ShrinkingBalls, TraceKind};
use ergolab::tower::{tower_bc_orbit, tower_bc_summarize, BaseTargets, TowerBcConfig, TowerSpec};

use super::{citation, fraction_report, schedule};
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Ctx, Outcome, TraceSet};

pub(crate) const BC_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 200
seed = 8
alpha = 2.0
zeta = 0.3
center = 0.8
eps = 0.25
density = 2.0
measure_cap = 0.8
tol_fraction = 0.9
"#;

pub(crate) const TOWER_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 200
seed = 9
beta = 0.5
i_max = 10_000_000
zeta = 0.3
center = 0.8
cap = 0.2
eps = 0.25
tail_fraction = 0.25
tol_lower_ratio = 0.9
tol_fraction = 0.9
"#;

pub(crate) fn bc_infinite(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let alpha = cfg.f64("alpha")?;
    let zeta = cfg.f64("zeta")?;
    let center = cfg.f64("center")?;
    let eps = cfg.f64("eps")?;
    let density = cfg.f64("density")?;
    let cap = cfg.f64("measure_cap")?;
    if !(eps > 0.0 && eps < alpha) {
        bail!("eps must lie in (0, alpha)");
    }
    if !(center > 0.5 && center < 1.0) {
        bail!("center {center} must lie in (1/2, 1)");
    }
    // mu(B_k) = density * 2 r_k, taken as min(k^-zeta, cap)
    let scale = 1.0 / (2.0 * density);
    let measure = |k: u64| ((k as f64).powf(-zeta)).min(cap);
    let balls = ShrinkingBalls::power(Point::interval(center), DistanceOn::Base, scale, zeta, cap * scale);
    let map = MapSpec::lsv(alpha)?;
    let counts = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        let mut orbit = Orbit::random(&map, &[], orbit_seed(cfg.u64("seed")?, 0, i))?;
        let mut bc = BcCounter::new(balls.clone());
        orbit.run(&sched, &mut bc)?;
        Ok(bc.into_trace())
    })?;
    let series = |b: f64| -> anyhow::Result<ProcessTrace> {
        let v = sched.points().iter().map(|&n| bc_series(measure, n, b)).collect();
        Ok(ProcessTrace::from_parts(TraceKind::Series, sched.points().to_vec(), v)?)
    };
    let lower = series(alpha + eps)?;
    let upper = series(alpha - eps)?;
    let (lo, hi) = (lower.values().last().copied().unwrap_or(f64::NAN), upper.values().last().copied().unwrap_or(f64::NAN));
    let finals: Vec<f64> = counts.iter().map(|t| t.last().map_or(f64::NAN, |l| l.1)).collect();
    let mut report = fraction_report(
        "bc-infinite",
        format!("final shrinking-target count at n = {}", sched.n_max()),
        &finals,
        (lo, hi),
        None,
        format!("lower series {lo:.2} <= count <= upper series {hi:.2}"),
        cfg.f64("tol_fraction")?,
        |i| lo <= finals[i] && finals[i] <= hi,
    )?;
    let below = finals.iter().filter(|&&c| c < lo).count() as f64 / finals.len() as f64;
    report.diagnostics.insert("fraction_below_lower".into(), below);
    report.diagnostics.insert("fraction_above_upper".into(), finals.iter().filter(|&&c| c > hi).count() as f64 / finals.len() as f64);
    let mut out = Outcome::default();
    out.reports.push(report);
    out.traces.push(TraceSet::new("counts", counts));
    out.traces.push(TraceSet::new("series", [lower, upper]));
    Ok(out)
}

pub(crate) fn tower_bc(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let spec = TowerSpec::new(cfg.f64("beta")?, cfg.u64("i_max")?)?;
    let targets = BaseTargets::power(cfg.f64("center")?, cfg.f64("zeta")?, cfg.f64("cap")?);
    let tcfg = TowerBcConfig {
        n_max: cfg.u64("n_max")?,
        ratio: cfg.f64("ratio")?,
        ensemble: cfg.usize("ensemble")?,
        seed: cfg.u64("seed")?,
        eps: cfg.f64("eps")?,
        tail_fraction: cfg.f64("tail_fraction")?,
        lower_threshold: cfg.f64("tol_lower_ratio")?,
        pass_fraction: cfg.f64("tol_fraction")?,
    };
    let orbits = ctx.ensemble(tcfg.ensemble, |i| Ok(tower_bc_orbit(&spec, &targets, &sched, tcfg.eps, orbit_seed(tcfg.seed, 0, i))?))?;
    let mut report = tower_bc_summarize(&spec, &tcfg, &orbits)?;
    report.citation = citation("tower-bc");
    let mut out = Outcome::default();
    out.reports.push(report);
    let lower = orbits.first().map(|o| vec![o.lower.clone(), o.upper.clone()]).unwrap_or_default();
    out.traces.push(TraceSet::new("counts", orbits.into_iter().map(|o| o.count)));
    out.traces.push(TraceSet::new("series", lower));
    Ok(out)
}
