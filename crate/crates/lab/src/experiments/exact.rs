use ergolab::circle::Circle;
use ergolab::diophantine::{construct_type, construct_y_xi_pair, ContinuedFraction};
use ergolab::dynamics::{AngleSpec, CheckpointSchedule, MapSpec, Monitor, Orbit, Point};
use ergolab::observables::{symbolic_coding_distance, DistanceOn, ObservableSpec};
use ergolab::processes::{check_max_hit_duality, BirkhoffMaxMonitor, HittingMonitor, HittingTargets, OrbitRecorder};
use ergolab::rng::DigitStream;
use num_bigint::BigUint;

use super::schedule;
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Check, Ctx, Outcome};

pub(crate) const DUALITY_DEFAULTS: &str = r#"
n_max = 1_000_000
ratio = 1.2
ensemble = 20
seed = 7
alpha = 2.0
center = 0.8
k = 1.0
level_start = 2.0
level_ratio = 1.5
level_count = 40
doubling_center = 0.3183098861837907
log_level_step = 0.5
log_level_count = 40
gamma = 4.0
xi = 4.0
cf_depth = 60
run_n_max = 24
"#;

fn levels(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| start * ratio.powi(j as i32)).collect()
}

/// Folds per-orbit results into one check: the first failure, or a summary.
fn all_orbits(name: &str, results: Vec<Result<String, String>>) -> Check {
    let n = results.len();
    match results.into_iter().enumerate().find_map(|(i, r)| r.err().map(|e| format!("orbit {i}: {e}"))) {
        Some(e) => Check::new(name, false, e),
        None => Check::new(name, true, format!("{n} orbits")),
    }
}

/// Runs sums, maxima and level hitting times on one pass and checks duality,
/// monotonicity and `S_n >= M_n` (the observable is non-negative).
fn duality_orbit(phi: &ObservableSpec, levels: &[f64], sched: &CheckpointSchedule, orbit: &mut Orbit) -> anyhow::Result<(Result<String, String>, Result<String, String>)> {
    let mut sums = BirkhoffMaxMonitor::new(phi.clone());
    let mut hits = HittingMonitor::new(HittingTargets::Levels { observable: phi.clone(), levels: levels.to_vec() }, 0)?;
    orbit.run(sched, &mut (&mut sums, &mut hits))?;
    let record = hits.record();
    let (s, m) = sums.into_traces();
    let duality = check_max_hit_duality(&m, &record).map(|()| format!("{} levels resolved", record.resolved_count()));
    let monotone = (|| {
        s.check_monotone().map_err(|e| format!("S_n: {e}"))?;
        m.check_monotone().map_err(|e| format!("M_n: {e}"))?;
        for (n, (a, b)) in s.checkpoints().iter().zip(s.values().iter().zip(m.values())) {
            if a < b {
                return Err(format!("S_{n} = {a} < M_{n} = {b}"));
            }
        }
        Ok(String::new())
    })();
    Ok((duality, monotone))
}

/// `p_k q_{k-1} - p_{k-1} q_k = (-1)^(k-1)` for every convergent.
fn determinant_identity(cf: &ContinuedFraction) -> Result<String, String> {
    let conv = cf.convergents(cf.depth()).map_err(|e| e.to_string())?;
    let one = BigUint::from(1u32);
    for k in 1..conv.len() {
        let (p, q) = &conv[k];
        let (pp, qp) = &conv[k - 1];
        let (a, b) = (p * qp, pp * q);
        let ok = if k % 2 == 1 { a == &b + &one } else { b == &a + &one };
        if !ok {
            return Err(format!("fails at k = {k}"));
        }
    }
    Ok(format!("{} convergents", conv.len()))
}

/// Compares fibers at checkpoints with `t0 + theta * (visits to [1/2, 1))`.
struct FiberCheck {
    thetas: Vec<Circle>,
    start: Vec<Circle>,
    visits: u64,
    /// Rotation: every step counts as a visit.
    every_step: bool,
    error: Option<String>,
    checkpoints: u64,
}

impl Monitor for FiberCheck {
    fn observe(&mut self, _t: u64, p: &Point) -> ergolab::Result<()> {
        if self.every_step || p.base >= 0.5 {
            self.visits += 1;
        }
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        self.checkpoints += 1;
        if self.error.is_some() {
            return;
        }
        for (j, (&theta, &t0)) in self.thetas.iter().zip(&self.start).enumerate() {
            let want = t0 + theta.times(self.visits as u128);
            if p.fibers()[j] != want {
                self.error = Some(format!("fiber {j} at n = {n}: {:?} != {:?}", p.fibers()[j], want));
            }
        }
    }
}

fn fiber_orbit(map: &MapSpec, thetas: Vec<Circle>, sched: &CheckpointSchedule, seed: u64, i: u64) -> anyhow::Result<Result<String, String>> {
    let mut d = DigitStream::from_seed(orbit_seed(seed, 90, i));
    let start: Vec<Circle> = thetas.iter().map(|_| Circle(d.next_u128())).collect();
    let mut orbit = Orbit::random(map, &start, orbit_seed(seed, 91, i))?;
    let every_step = matches!(map, MapSpec::CircleRotation { .. });
    let mut mon = FiberCheck { thetas, start, visits: 0, every_step, error: None, checkpoints: 0 };
    orbit.run(sched, &mut mon)?;
    Ok(match mon.error {
        Some(e) => Err(e),
        None => Ok(format!("{} checkpoints, {} visits", mon.checkpoints, mon.visits)),
    })
}

/// Checks the run-length/hitting link on the stored LSV orbit `bases`.
///
/// The coding distance to 1 is `2^-(r + 1)` where `r` is the run of ones in
/// the coding, and while the orbit stays in `[1/2, 1)` the LSV map agrees
/// with the doubling map, so `r` is also the run of ones in the stored LSV
/// symbols. With `tau_n` the first `i >= 1` such that `f^i x` lies in
/// `[1 - 2^-(n-1), 1]`, the minimum of the coding distance over `1..=tau_n`
/// is at most `2^-n`, and over `1..tau_n` at least `2^-n`.
fn run_link(bases: &[f64], n_max: u32) -> Result<String, String> {
    let syms: Vec<u8> = bases.iter().map(|&x| u8::from(x >= 0.5)).collect();
    // run[i] = number of consecutive ones starting at index i
    let mut run = vec![0u32; syms.len() + 1];
    for i in (0..syms.len()).rev() {
        run[i] = if syms[i] == 1 { run[i + 1] + 1 } else { 0 };
    }
    let dist = |i: usize| 0.5f64.powi(run[i] as i32 + 1);
    let mut checked = 0usize;
    for (i, &x) in bases.iter().enumerate().skip(1) {
        // the run is only known when it ends inside the stored orbit
        if i + run[i] as usize >= bases.len() || run[i] >= 60 {
            continue;
        }
        let d = symbolic_coding_distance(x, 1.0, 64).map_err(|e| e.to_string())?;
        if d.value != dist(i) {
            return Err(format!("i = {i}: coding distance {} but stored run gives {}", d.value, dist(i)));
        }
        checked += 1;
    }
    let mut resolved = 0;
    for n in 2..=n_max {
        let edge = 1.0 - 0.5f64.powi(n as i32 - 1);
        let Some(tau) = (1..bases.len()).find(|&i| bases[i] >= edge) else { continue };
        if tau + run[tau] as usize >= bases.len() {
            continue;
        }
        let bound = 0.5f64.powi(n as i32);
        let upto = (1..=tau).map(dist).fold(f64::INFINITY, f64::min);
        let before = (1..tau).map(dist).fold(f64::INFINITY, f64::min);
        if upto > bound {
            return Err(format!("n = {n}, tau = {tau}: min over 1..=tau is {upto} > {bound}"));
        }
        if before < bound {
            return Err(format!("n = {n}, tau = {tau}: min over 1..tau is {before} < {bound}"));
        }
        resolved += 1;
    }
    Ok(format!("{checked} distances, {resolved} levels"))
}

pub(crate) fn max_hit_duality(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let seed = cfg.u64("seed")?;
    let n_orbits = cfg.usize("ensemble")?;
    let alpha = cfg.f64("alpha")?;
    let mut out = Outcome::default();

    let lsv = MapSpec::lsv(alpha)?;
    let phi = ObservableSpec::dist_power(Point::interval(cfg.f64("center")?), cfg.f64("k")?, DistanceOn::Base);
    let lv = levels(cfg.f64("level_start")?, cfg.f64("level_ratio")?, cfg.usize("level_count")?);
    let runs = ctx.ensemble(n_orbits, |i| {
        let mut orbit = Orbit::random(&lsv, &[], orbit_seed(seed, 0, i))?;
        duality_orbit(&phi, &lv, &sched, &mut orbit)
    })?;
    let (d, m): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    out.checks.push(all_orbits(&format!("max-hit duality, LSV alpha = {alpha}, d^-k"), d));
    out.checks.push(all_orbits(&format!("monotone traces and S_n >= M_n, LSV alpha = {alpha}"), m));

    let psi = ObservableSpec::neg_log_dist(Point::interval(cfg.f64("doubling_center")?), DistanceOn::Base);
    let step = cfg.f64("log_level_step")?;
    let lv: Vec<f64> = (1..=cfg.usize("log_level_count")?).map(|j| j as f64 * step).collect();
    let runs = ctx.ensemble(n_orbits, |i| {
        let mut orbit = Orbit::random(&MapSpec::Doubling, &[], orbit_seed(seed, 1, i))?;
        duality_orbit(&psi, &lv, &sched, &mut orbit)
    })?;
    let (d, m): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    out.checks.push(all_orbits("max-hit duality, doubling, -log d", d));
    out.checks.push(all_orbits("monotone traces and S_n >= M_n, doubling", m));

    let depth = cfg.usize("cf_depth")?;
    let typed = construct_type(cfg.f64("gamma")?, depth.min(12))?;
    let pair = construct_y_xi_pair(cfg.f64("xi")?, 4)?;
    let fractions = [
        ("golden", ContinuedFraction::golden(depth)),
        ("type gamma", typed.clone()),
        ("Y_xi theta", pair.theta.clone()),
        ("Y_xi theta'", pair.theta_prime.clone()),
        ("type gamma, deepened", typed.deepened(&(BigUint::from(1u32) << 200u32))),
    ];
    for (name, cf) in &fractions {
        out.checks.push(Check::from_result(format!("continued-fraction determinant identity, {name}"), determinant_identity(cf)));
    }

    let theta = AngleSpec::from_cf(typed);
    let (theta1, theta2) = (AngleSpec::from_cf(pair.theta), AngleSpec::from_cf(pair.theta_prime));
    let maps = [
        ("rotation", MapSpec::CircleRotation { theta: theta.clone() }, vec![theta.fixed()]),
        ("doubling skew product", MapSpec::SkewDoublingCircle { theta: theta.clone() }, vec![theta.fixed()]),
        (
            "doubling torus skew product",
            MapSpec::SkewDoublingTorus2 { theta1: theta1.clone(), theta2: theta2.clone() },
            vec![theta1.fixed(), theta2.fixed()],
        ),
    ];
    for (v, (name, map, thetas)) in maps.iter().enumerate() {
        let results = ctx.ensemble(n_orbits, |i| fiber_orbit(map, thetas.clone(), &sched, seed + 1000 * v as u64, i))?;
        out.checks.push(all_orbits(&format!("fiber = start + theta * visits, {name}"), results));
    }

    let n_runs = cfg.u64("run_n_max")? as u32;
    let results = ctx.ensemble(n_orbits, |i| {
        let mut orbit = Orbit::random(&lsv, &[], orbit_seed(seed, 2, i))?;
        let mut rec = OrbitRecorder::new();
        orbit.run(&sched, &mut rec)?;
        Ok(run_link(&rec.bases, n_runs))
    })?;
    out.checks.push(all_orbits(&format!("run-length/hitting link on stored LSV alpha = {alpha} symbols"), results));
    Ok(out)
}
