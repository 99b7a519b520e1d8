use anyhow::bail;
use ergolab::circle::Circle;
use ergolab::diophantine::{construct_type, construct_y_xi_pair};
use ergolab::dynamics::{AngleSpec, CheckpointSchedule, MapSpec, Orbit, Point};
use ergolab::estimators::{log_ratio_sequence, median, tail_liminf_limsup};
use ergolab::observables::{DistanceOn, ObservableSpec};
use ergolab::processes::{BirkhoffMaxMonitor, ProcessTrace};
use ergolab::rng::DigitStream;

use super::{fraction_report, schedule};
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Ctx, Outcome, TraceSet};

pub(crate) const ROTATION_DEFAULTS: &str = r#"
n_max = 100_000_000
ratio = 1.2
ensemble = 50
seed = 12
gamma = 4.0
beta = 2.0
cf_depth = 12
window = 0.75
tol_lo_slack = 0.2
tol_hi_slack = 0.2
tol_gap = 0.3
tol_fraction = 0.8
"#;

pub(crate) const SKEW_DEFAULTS: &str = r#"
n_max = 100_000_000
ratio = 1.2
ensemble = 50
seed = 13
gamma = 4.0
beta = 2.0
cf_depth = 12
window = 0.75
tol_lo_slack = 0.2
tol_hi_slack = 0.2
tol_gap = 0.3
tol_fraction = 0.8
"#;

pub(crate) const YXI_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 50
seed = 14
xi = 4.0
cf_depth = 4
k = 16.0
target = [0.8, 0.0, 0.0]
window = 0.25
tol_limsup = 0.25
"#;

/// Runs `S_n` of `phi` from a random start and returns the trace with the
/// tail extremes of `log S_n / log n`.
fn sums(map: &MapSpec, dim: usize, phi: &ObservableSpec, sched: &CheckpointSchedule, seed: u64, i: u64, window: f64) -> anyhow::Result<(ProcessTrace, f64, f64)> {
    let mut d = DigitStream::from_seed(orbit_seed(seed, 1, i));
    let fibers: Vec<Circle> = (0..dim).map(|_| Circle(d.next_u128())).collect();
    let mut orbit = Orbit::random(map, &fibers, orbit_seed(seed, 0, i))?;
    let mut mon = BirkhoffMaxMonitor::new(phi.clone());
    orbit.run(sched, &mut mon)?;
    let (s, _) = mon.into_traces();
    let seq: Vec<f64> = log_ratio_sequence(&s).into_iter().map(|(_, r)| r).collect();
    let (lo, hi) = tail_liminf_limsup(&seq, window).unwrap_or((f64::NAN, f64::NAN));
    Ok((s, lo, hi))
}

/// Shared body of the two oscillation experiments; `lower` is the liminf
/// bound `1 + beta/gamma` (rotation) or `2 + beta/gamma` (skew product).
fn oscillation(name: &str, cfg: &ExperimentConfig, ctx: &Ctx, map: MapSpec, lower: f64) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let beta = cfg.f64("beta")?;
    let window = cfg.f64("window")?;
    let lo_bound = lower + cfg.f64("tol_lo_slack")?;
    let hi_bound = beta - cfg.f64("tol_hi_slack")?;
    let gap = cfg.f64("tol_gap")?;
    let phi = ObservableSpec::dist_power(Point::circle(Circle::ZERO), beta, DistanceOn::Fiber(0));
    let runs = ctx.ensemble(cfg.usize("ensemble")?, |i| sums(&map, 1, &phi, &sched, cfg.u64("seed")?, i, window))?;
    let lows: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let highs: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let gaps: Vec<f64> = runs.iter().map(|r| r.2 - r.1).collect();
    let mut report = fraction_report(
        name,
        "gap between tail max and tail min of log S_n / log n",
        &gaps,
        (median(&lows), median(&highs)),
        None,
        format!("tail_lo <= {lo_bound}, tail_hi >= {hi_bound}, gap >= {gap}"),
        cfg.f64("tol_fraction")?,
        |i| lows[i] <= lo_bound && highs[i] >= hi_bound && gaps[i] >= gap,
    )?;
    report.diagnostics.insert("liminf_bound".into(), lower);
    report.diagnostics.insert("limsup_bound".into(), beta);
    let mut out = Outcome::default();
    out.reports.push(report);
    out.traces.push(TraceSet::new("sums", runs.into_iter().map(|r| r.0)));
    Ok(out)
}

fn typed_angle(cfg: &ExperimentConfig) -> anyhow::Result<(f64, AngleSpec)> {
    let gamma = cfg.f64("gamma")?;
    let beta = cfg.f64("beta")?;
    if !(1.0 / gamma < 1.0 - 1.0 / beta) {
        bail!("oscillation needs 1/gamma < 1 - 1/beta");
    }
    Ok((gamma, AngleSpec::from_cf(construct_type(gamma, cfg.usize("cf_depth")?)?)))
}

pub(crate) fn rotation_oscillation(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let (gamma, theta) = typed_angle(cfg)?;
    let lower = 1.0 + cfg.f64("beta")? / gamma;
    oscillation("rotation-oscillation", cfg, ctx, MapSpec::CircleRotation { theta }, lower)
}

pub(crate) fn skew_oscillation(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let (gamma, theta) = typed_angle(cfg)?;
    let lower = 2.0 + cfg.f64("beta")? / gamma;
    oscillation("skew-oscillation", cfg, ctx, MapSpec::SkewDoublingCircle { theta }, lower)
}

pub(crate) fn yxi_slow(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let xi = cfg.f64("xi")?;
    let k = cfg.f64("k")?;
    let window = cfg.f64("window")?;
    let tol = cfg.f64("tol_limsup")?;
    let target = cfg.f64_list("target")?;
    if target.len() != 3 {
        bail!("target must be [x, t1, t2]");
    }
    let pair = construct_y_xi_pair(xi, cfg.usize("cf_depth")?)?;
    if !pair.certified() {
        bail!("angle pair failed its Y_xi certificate");
    }
    let map = MapSpec::SkewDoublingTorus2 { theta1: AngleSpec::from_cf(pair.theta), theta2: AngleSpec::from_cf(pair.theta_prime) };
    let center = Point::skew(target[0], &[Circle::from_f64(target[1]), Circle::from_f64(target[2])]);
    let phi = ObservableSpec::dist_power(center, k, DistanceOn::Full);
    let bound = k / xi.max(3.0) + 1.0;
    let runs = ctx.ensemble(cfg.usize("ensemble")?, |i| sums(&map, 2, &phi, &sched, cfg.u64("seed")?, i, window))?;
    let highs: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let lows: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let mut report = fraction_report(
        "yxi-slow",
        "tail max of log S_n / log n",
        &highs,
        (median(&lows), median(&highs)),
        Some(bound),
        format!("at most {bound} + {tol}"),
        0.0,
        |i| highs[i] <= bound + tol,
    )?;
    report.pass = report.fitted_slope <= bound + tol;
    report.tolerance = format!("median at most {bound} + {tol}");
    report.diagnostics.insert("generic_exponent".into(), k / 3.0);
    let mut out = Outcome::default();
    out.reports.push(report);
    out.traces.push(TraceSet::new("sums", runs.into_iter().map(|r| r.0)));
    Ok(out)
}
