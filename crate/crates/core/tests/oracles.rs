use ergolab::circle::Circle;
use ergolab::diophantine::{construct_type, rotation_hitting_time, ContinuedFraction};
use ergolab::dynamics::{CheckpointSchedule, InducedMode, InducedOrbit, InducedSystem, MapSpec, Orbit, Point};
use ergolab::estimators::{hitting_from_min_distance, hitting_indicators, ols};
use ergolab::observables::DistanceOn;
use ergolab::processes::{BcCounter, HittingMonitor, HittingRecord, HittingTargets, MinDistanceMonitor, OrbitRecorder, RunLengthMonitor, ShrinkingBalls};
use ergolab::rng::{DigitStream, OrbitSeed};
use ergolab::tower::{TowerOrbit, TowerSpec};

fn seed(s: u64) -> OrbitSeed {
    OrbitSeed::new(s, 0)
}

#[test]
fn tent_hitting_matches_exhaustive_scan() {
    let n = 1_000_000;
    let r = 2f64.powi(-10);
    for s in 0..5 {
        let mut rec = OrbitRecorder::new();
        let targets = HittingTargets::Balls { center: Point::interval(0.5), on: DistanceOn::Base, radii: vec![r] };
        let mut h = HittingMonitor::new(targets, 1).unwrap();
        Orbit::random(&MapSpec::Tent, &[], seed(s)).unwrap().run(&CheckpointSchedule::explicit(vec![n]).unwrap(), &mut (&mut rec, &mut h)).unwrap();
        let scan = rec.bases.iter().skip(1).position(|&x| (x - 0.5).abs() <= r).map(|i| i as u64 + 1);
        assert!(scan.is_some());
        assert_eq!(h.record().times[0], scan);
    }
}

#[test]
fn lsv_run_lengths_match_rescan() {
    let sched = CheckpointSchedule::geometric(1.25, 1_000_000).unwrap();
    let mut rec = OrbitRecorder::new();
    let mut m = RunLengthMonitor::new(1);
    Orbit::random(&MapSpec::lsv(2.0).unwrap(), &[], seed(7)).unwrap().run(&sched, &mut (&mut rec, &mut m)).unwrap();
    let trace = m.into_trace();
    let sym = rec.symbols();
    let (mut best, mut cur, mut k) = (0u64, 0u64, 0usize);
    for (i, &s) in sym.iter().enumerate() {
        cur = if s == 1 { cur + 1 } else { 0 };
        best = best.max(cur);
        while k < trace.len() && trace.checkpoints()[k] == i as u64 + 1 {
            assert_eq!(trace.values()[k], best as f64, "n = {}", i + 1);
            k += 1;
        }
    }
    assert_eq!(k, trace.len());
}

fn ball_measure(c: f64, r: f64) -> f64 {
    ((c + r).min(1.0) - (c - r).max(0.0)).max(0.0)
}

#[test]
fn doubling_shrinking_targets() {
    let n = 100_000;
    let expected: f64 = (1..=n).map(|k| ball_measure(0.3, 0.5 * (k as f64).powf(-0.6))).sum();
    let sched = CheckpointSchedule::explicit(vec![n]).unwrap();
    let good = (0..200)
        .filter(|&s| {
            let mut bc = BcCounter::new(ShrinkingBalls::power(Point::interval(0.3), DistanceOn::Base, 0.5, 0.6, 0.5));
            Orbit::random(&MapSpec::Doubling, &[], seed(s)).unwrap().run(&sched, &mut bc).unwrap();
            let ratio = bc.into_trace().values()[0] / expected;
            (0.8..=1.2).contains(&ratio)
        })
        .count();
    assert!(good >= 180, "{good} of 200");
}

#[test]
fn induced_returns_match_direct_scan() {
    let sys = InducedSystem::with_depth(1.0, 64).unwrap();
    let b = ergolab::dynamics::LsvBranch::new(1.0).unwrap();
    let mut digits = DigitStream::from_seed(seed(11));
    for _ in 0..10_000 {
        let y0 = 0.5 + 0.5 * digits.uniform();
        let mut orbit = InducedOrbit::new(&sys, y0, InducedMode::Exact).unwrap();
        let (mut x, mut clock) = (y0, 0u64);
        while clock <= 20 {
            let (y, r) = orbit.advance().unwrap();
            let mut steps = 0;
            loop {
                x = b.apply(x);
                steps += 1;
                if x >= 0.5 {
                    break;
                }
            }
            assert_eq!((x, steps), (y, r));
            clock += r;
        }
    }
}

#[test]
fn cell_measures() {
    let sys = InducedSystem::with_depth(2.0, 100_000).unwrap();
    let mut total = 0.0;
    for n in 1..=100_000 {
        let m = sys.cell_measure(n);
        assert!(m > 0.0);
        total += m;
    }
    assert!(total < 0.5 && total > 0.5 - 1e-2, "{total}");
    let ns: Vec<f64> = (0..=60).map(|j| 100.0 * 1000f64.powf(j as f64 / 60.0)).collect();
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = ns.iter().map(|&n| sys.cell_measure(n.round() as u64).ln()).collect();
    let slope = ols(&xs, &ys).slope;
    assert!((slope + 1.5).abs() <= 0.05, "{slope}");
}

#[test]
fn tower_return_frequencies() {
    let spec = TowerSpec::new(0.5, 10_000).unwrap();
    let mut orbit = TowerOrbit::random(&spec, seed(3));
    let n = 1_000_000usize;
    let mut counts = vec![0u64; 101];
    for _ in 0..n {
        let r = orbit.next_return();
        if r <= 100 {
            counts[r as usize] += 1;
        }
    }
    // 100 simultaneous 3-sigma comparisons: about 0.27 expected exceedances
    let (mut chi2, mut outliers) = (0.0, 0);
    for (i, &c) in counts.iter().enumerate().skip(1) {
        let l = spec.branch_length(i as u64);
        let se = (l * (1.0 - l) / n as f64).sqrt();
        let z = (c as f64 / n as f64 - l) / se;
        chi2 += z * z;
        outliers += usize::from(z.abs() > 3.0);
    }
    assert!(outliers <= 2, "{outliers} branches beyond 3 se");
    assert!((61.0..=149.0).contains(&chi2), "chi2 = {chi2}");
}

#[test]
fn min_distance_and_hitting_records_agree() {
    let radii: Vec<f64> = (1..=16).map(|k| 0.5f64.powi(k)).collect();
    let center = Point::interval(0.61);
    for (s, map) in [MapSpec::Doubling, MapSpec::Tent, MapSpec::lsv(0.5).unwrap()].iter().enumerate() {
        let every = CheckpointSchedule::explicit((1..=300_000).collect()).unwrap();
        let sparse = CheckpointSchedule::geometric(1.1, 300_000).unwrap();
        let targets = HittingTargets::Balls { center, on: DistanceOn::Base, radii: radii.clone() };
        let mut h = HittingMonitor::new(targets, 1).unwrap();
        let mut dense = MinDistanceMonitor::new(center, DistanceOn::Base, 1);
        Orbit::random(map, &[], seed(s as u64)).unwrap().run(&every, &mut (&mut h, &mut dense)).unwrap();
        let mut coarse = MinDistanceMonitor::new(center, DistanceOn::Base, 1);
        Orbit::random(map, &[], seed(s as u64)).unwrap().run(&sparse, &mut coarse).unwrap();
        let record = h.record();
        let (dense, coarse) = (dense.into_trace(), coarse.into_trace());
        let mut from_coarse = Vec::new();
        for (&r, &tau) in radii.iter().zip(&record.times) {
            let tau = tau.expect("every radius is hit");
            assert_eq!(hitting_from_min_distance(&dense, r), Some(tau));
            let c = hitting_from_min_distance(&coarse, r).unwrap();
            assert!(c >= tau && c as f64 <= 1.1 * tau as f64 + 1.0, "{c} vs {tau}");
            from_coarse.push(Some(c));
        }
        let coarse_record = HittingRecord { targets: radii.clone(), times: from_coarse, horizon: record.horizon };
        let (a, b) = (hitting_indicators(&record, 0.5).unwrap(), hitting_indicators(&coarse_record, 0.5).unwrap());
        let grid = 1.1f64.ln() / (9.0 * 2f64.ln());
        assert!((a.upper - b.upper).abs() <= 2.0 * grid + 1e-12, "{a:?} {b:?}");
        assert!((a.lower - b.lower).abs() <= 2.0 * grid + 1e-12, "{a:?} {b:?}");
    }
}

/// `log tau_r / -log r` at `r = 2^-k`, `k = 1..=60`, from exact rotation hitting times.
fn rotation_ratios(cf: &ContinuedFraction, s: u64) -> Vec<f64> {
    let theta = cf.fixed_point();
    let mut d = DigitStream::from_seed(seed(s));
    let (x, y) = (Circle(d.next_u128()), Circle(d.next_u128()));
    (1..=60)
        .map(|k| {
            let tau = rotation_hitting_time(theta, x, y, 0.5f64.powi(k)).unwrap();
            (tau as f64).ln() / (f64::from(k) * 2f64.ln())
        })
        .collect()
}

fn extremes(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[test]
fn rotation_hitting_exponents_follow_type() {
    let golden = ContinuedFraction::golden(200);
    let ok = (0..50)
        .filter(|&s| {
            let (lo, hi) = extremes(&rotation_ratios(&golden, s)[45..]);
            (lo - 1.0).abs() <= 0.15 && (hi - 1.0).abs() <= 0.15
        })
        .count();
    assert!(ok >= 40, "golden: {ok} of 50");

    // q_n = 2^28.5 and q_{n+1} = 2^85.6: just below r = 1/q_n the orbit
    // needs about q_{n+1} steps, so the window must contain that scale
    let cubic = construct_type(3.0, 12).unwrap();
    let q: Vec<f64> = cubic.denominators().iter().map(|q| ergolab::diophantine::ln_big(q) / 2f64.ln()).collect();
    assert!((28.0..29.0).contains(&q[5]) && q[6] > 85.0);
    let ok = (0..50)
        .filter(|&s| {
            let (_, hi) = extremes(&rotation_ratios(&cubic, s)[20..]);
            (hi - 3.0).abs() <= 0.45
        })
        .count();
    assert!(ok >= 40, "type 3: {ok} of 50");
}

#[test]
fn preimage_asymptotics() {
    for alpha in [0.5, 1.0, 2.0] {
        let sys = InducedSystem::with_depth(alpha, 1_000).unwrap();
        let n = 1_000_000f64;
        let scaled = sys.x(n as i64) * (alpha * 2f64.powf(alpha) * n).powf(1.0 / alpha);
        assert!((scaled - 1.0).abs() < 0.01, "alpha {alpha}: {scaled}");
    }
}
