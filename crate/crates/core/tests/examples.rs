use std::sync::Arc;

use approx::assert_abs_diff_eq;
use ergolab::circle::Circle;
use ergolab::diophantine::{construct_type, construct_y_xi_pair, rotation_distance, ContinuedFraction};
use ergolab::dynamics::{iterate_with_checkpoints, step, CheckpointSchedule, InducedMode, InducedOrbit, InducedSystem, MapSpec, Point};
use ergolab::estimators::{invert_monotone_bound, loglog_slope, tail_liminf_limsup, TabulatedFn};
use ergolab::observables::{alpha_phi_empirical, symbolic_coding_distance, DistanceOn, ObservableKind, ObservableSpec};
use ergolab::processes::{aaronson_diagnostic, erdos_renyi, BirkhoffMaxMonitor, HittingMonitor, HittingTargets, MinDistanceMonitor, ProcessTrace, StateMonitor, TraceKind};
use ergolab::tower::{tower_step, TowerPoint, TowerSpec};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sched(points: &[u64]) -> CheckpointSchedule {
    CheckpointSchedule::explicit(points.to_vec()).unwrap()
}

fn base_trace(map: &MapSpec, x0: f64, points: &[u64]) -> ProcessTrace {
    let mut st = StateMonitor::new();
    iterate_with_checkpoints(map, &Point::interval(x0), &sched(points), &mut [&mut st]).unwrap();
    st.base_trace()
}

#[test]
fn single_steps() {
    let lsv1 = MapSpec::lsv(1.0).unwrap();
    assert_abs_diff_eq!(step(&lsv1, &Point::interval(0.25)).unwrap().base, 0.375, epsilon = 1e-15);
    for alpha in [0.5, 1.0, 2.0, 3.7] {
        assert_eq!(step(&MapSpec::lsv(alpha).unwrap(), &Point::interval(0.75)).unwrap().base, 0.5);
    }
    assert_eq!(step(&MapSpec::Tent, &Point::interval(0.5)).unwrap().base, 1.0);
    assert_abs_diff_eq!(step(&MapSpec::Doubling, &Point::interval(0.3)).unwrap().base, 0.6, epsilon = 1e-15);
}

#[test]
fn checkpointed_iteration() {
    let t = base_trace(&MapSpec::Doubling, 0.3, &[1, 2, 4]);
    assert_eq!(t.checkpoints(), &[1, 2, 4]);
    for (v, want) in t.values().iter().zip([0.6, 0.2, 0.8]) {
        assert_abs_diff_eq!(*v, want, epsilon = 1e-14);
    }
    // 1/2 belongs to the right branch, so it maps to 0
    let t = base_trace(&MapSpec::lsv(1.0).unwrap(), 0.75, &[1, 2]);
    assert_eq!(t.values(), &[0.5, 0.0]);

    let empty = CheckpointSchedule::geometric(1.2, 0).unwrap();
    let mut st = StateMonitor::new();
    let mut bm = BirkhoffMaxMonitor::new(ObservableSpec::dist_power(Point::interval(0.5), 1.0, DistanceOn::Base));
    let steps = iterate_with_checkpoints(&MapSpec::Tent, &Point::interval(0.3), &empty, &mut [&mut st, &mut bm]).unwrap();
    assert_eq!(steps, 0);
    assert!(st.points().is_empty());
    let (s, m) = bm.into_traces();
    assert!(s.is_empty() && m.is_empty());
}

#[test]
fn induced_tables_alpha_one() {
    let sys = InducedSystem::with_depth(1.0, 64).unwrap();
    assert_abs_diff_eq!(sys.x(1), (5f64.sqrt() - 1.0) / 4.0, epsilon = 1e-12);
    assert_eq!(sys.z(1), 0.75);
    assert_abs_diff_eq!(sys.cell_measure(1), 0.25, epsilon = 1e-15);
    assert_eq!(sys.return_time_of_entry(0.4), 1);
    assert_eq!(sys.return_time_of_entry(0.32), 1);
    assert_eq!(sys.return_time_of_entry(0.30), 2);
    let mut last = 0;
    for k in 1..40 {
        let n = sys.return_time_of_entry(0.5 * 0.7f64.powi(k));
        assert!(n >= last);
        last = n;
    }
    assert!(last > 1000);
}

#[test]
fn induced_first_events() {
    let sys = InducedSystem::with_depth(1.0, 64).unwrap();
    let mut o = InducedOrbit::new(&sys, 0.9, InducedMode::Exact).unwrap();
    let (y, r) = o.advance().unwrap();
    assert_eq!(r, 1);
    assert_abs_diff_eq!(y, 0.8, epsilon = 1e-15);
    // f(0.6) = 0.2 leaves Y
    let (_, r) = InducedOrbit::new(&sys, 0.6, InducedMode::Exact).unwrap().advance().unwrap();
    assert!(r > 1);
}

#[test]
fn observable_values() {
    let p = |x| Point::interval(x);
    let o = ObservableSpec::dist_power(p(0.0), 1.0, DistanceOn::Base);
    assert_eq!(o.eval(&p(0.25)), 4.0);
    let o = ObservableSpec::neg_log_dist(p(0.5), DistanceOn::Base);
    assert_abs_diff_eq!(o.eval(&p(0.5 + (-3f64).exp())), 3.0, epsilon = 1e-12);
    let ball = ObservableSpec::new(ObservableKind::BallIndicator { center: p(0.7), radius: 0.1, on: DistanceOn::Base });
    assert_eq!(ball.eval(&p(0.75)), 1.0);
    assert_eq!(ball.eval(&p(0.85)), 0.0);
    assert_eq!(o.eval(&p(0.5)), f64::INFINITY);
}

#[test]
fn coding_distance_examples() {
    let d = symbolic_coding_distance(0.5, 0.25, 20).unwrap();
    assert_eq!((d.value, d.n_star), (0.5, Some(1)));
    let d = symbolic_coding_distance(0.75, 0.625, 20).unwrap();
    assert_eq!((d.value, d.n_star), (0.25, Some(2)));
    let d = symbolic_coding_distance(0.3, 0.3, 30).unwrap();
    assert!(d.truncated);
    assert_eq!(d.value, 0.5f64.powi(30));
}

fn lebesgue(seed: u64) -> impl FnMut() -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move || Point::interval(rng.random::<f64>())
}

#[test]
fn empirical_tail_exponents() {
    let levels: Vec<f64> = (0..8).map(|i| 4.0 * 2f64.powi(i)).collect();
    let o = ObservableSpec::dist_power(Point::interval(0.4), 1.0, DistanceOn::Base);
    let a = alpha_phi_empirical(&o, lebesgue(1), &levels, 400_000).unwrap();
    assert_abs_diff_eq!(a, 1.0, epsilon = 0.05);
    let o = ObservableSpec::dist_power(Point::interval(0.4), 2.0, DistanceOn::Base);
    let levels: Vec<f64> = (0..8).map(|i| 16.0 * 4f64.powi(i)).collect();
    let a = alpha_phi_empirical(&o, lebesgue(2), &levels, 400_000).unwrap();
    assert_abs_diff_eq!(a, 0.5, epsilon = 0.05);

    // return time to [1/2, 1) under Lebesgue measure on Y
    let sys = Arc::new(InducedSystem::with_depth(2.0, 1 << 16).unwrap());
    let o = ObservableSpec::return_time(sys);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let levels: Vec<f64> = (0..8).map(|i| 10.0 * 2f64.powi(i)).collect();
    let a = alpha_phi_empirical(&o, || Point::interval(0.5 + 0.5 * rng.random::<f64>()), &levels, 400_000).unwrap();
    assert_abs_diff_eq!(a, 0.5, epsilon = 0.05);
}

#[test]
fn birkhoff_and_max() {
    let phi = ObservableSpec::dist_power(Point::interval(0.5), 1.0, DistanceOn::Base);
    let mut bm = BirkhoffMaxMonitor::new(phi);
    iterate_with_checkpoints(&MapSpec::Doubling, &Point::interval(0.3), &sched(&[4]), &mut [&mut bm]).unwrap();
    let (s, m) = bm.into_traces();
    assert_abs_diff_eq!(s.values()[0], 1.0 / 0.2 + 1.0 / 0.1 + 1.0 / 0.3 + 1.0 / 0.1, epsilon = 1e-9);
    assert_abs_diff_eq!(m.values()[0], 10.0, epsilon = 1e-9);

    let constant = ObservableSpec::new(ObservableKind::BallIndicator { center: Point::interval(0.5), radius: 1.0, on: DistanceOn::Base });
    let mut bm = BirkhoffMaxMonitor::new(constant);
    iterate_with_checkpoints(&MapSpec::Tent, &Point::interval(0.123), &sched(&[1, 10, 100]), &mut [&mut bm]).unwrap();
    let (s, m) = bm.into_traces();
    assert_eq!(s.values(), &[1.0, 10.0, 100.0]);
    assert_eq!(m.values(), &[1.0, 1.0, 1.0]);
}

#[test]
fn hitting_examples() {
    let balls = |c: f64, radii: Vec<f64>| HittingTargets::Balls { center: Point::interval(c), on: DistanceOn::Base, radii };
    let mut h = HittingMonitor::new(balls(0.6, vec![0.05]), 0).unwrap();
    iterate_with_checkpoints(&MapSpec::Doubling, &Point::interval(0.3), &sched(&[3]), &mut [&mut h]).unwrap();
    assert_eq!(h.record().times, vec![Some(1)]);
    let mut h = HittingMonitor::new(balls(0.6, vec![2.0]), 0).unwrap();
    iterate_with_checkpoints(&MapSpec::Doubling, &Point::interval(0.3), &sched(&[3]), &mut [&mut h]).unwrap();
    assert_eq!(h.record().times, vec![Some(0)]);
    assert!(HittingMonitor::new(balls(0.6, vec![0.1, 0.2]), 0).is_err());
}

#[test]
fn min_distance_examples() {
    let mut d = MinDistanceMonitor::new(Point::interval(0.55), DistanceOn::Base, 0);
    iterate_with_checkpoints(&MapSpec::Doubling, &Point::interval(0.3), &sched(&[1, 2, 3]), &mut [&mut d]).unwrap();
    let t = d.into_trace();
    assert_abs_diff_eq!(t.values()[1], 0.05, epsilon = 1e-12);
    assert_abs_diff_eq!(t.values()[2], 0.05, epsilon = 1e-12);
}

#[test]
fn window_max_examples() {
    let s = [1u8, 1, 0, 1, 1, 1];
    assert_eq!(erdos_renyi(&s, 2).unwrap(), 2);
    assert_eq!(erdos_renyi(&s, s.len()).unwrap(), 5);
    assert!(erdos_renyi(&s, 7).is_err());
}

#[test]
fn aaronson_examples() {
    let ns: Vec<u64> = (1..=20).map(|k| 1u64 << k).collect();
    let squares = ProcessTrace::from_parts(TraceKind::BirkhoffSum, ns.clone(), ns.iter().map(|&n| (n * n) as f64).collect()).unwrap();
    let r = aaronson_diagnostic(&squares, 0.5, 0.1).unwrap();
    for (&n, &v) in ns.iter().zip(r.values()) {
        assert_abs_diff_eq!(v, (n as f64).powf(-0.2), epsilon = 1e-12);
    }
    let linear = ProcessTrace::from_parts(TraceKind::BirkhoffSum, ns.clone(), ns.iter().map(|&n| n as f64).collect()).unwrap();
    let r = aaronson_diagnostic(&linear, 1.5, 0.5).unwrap();
    assert!(r.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

#[test]
fn convergent_examples() {
    let golden = ContinuedFraction::golden(10);
    let qs: Vec<BigUint> = golden.convergents(5).unwrap().into_iter().map(|c| c.1).collect();
    assert_eq!(qs, [1u64, 1, 2, 3, 5, 8].map(big));
    let sqrt2 = ContinuedFraction::from_u64(0, &[2; 10]).unwrap();
    let qs: Vec<BigUint> = sqrt2.convergents(4).unwrap().into_iter().map(|c| c.1).collect();
    assert_eq!(qs, [1u64, 2, 5, 12, 29].map(big));

    let conv = ContinuedFraction::from_u64(0, &[1; 30]).unwrap().convergents(30).unwrap();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for w in conv.windows(2).skip(1).take(20) {
        let (p, q) = (&w[0].0, &w[0].1);
        let q1: f64 = w[1].1.to_string().parse().unwrap();
        let (p, q): (f64, f64) = (p.to_string().parse().unwrap(), q.to_string().parse().unwrap());
        assert!((p / q - phi).abs() <= 1.0 / (q * q1) + 1e-15);
    }
}

#[test]
fn type_examples() {
    let g = ContinuedFraction::golden(40).type_estimate(30).unwrap();
    assert_abs_diff_eq!(g.gamma, 1.0, epsilon = 0.01);
    let t = construct_type(4.0, 12).unwrap().type_estimate(12).unwrap();
    assert!((3.8..=4.2).contains(&t.gamma), "{}", t.gamma);
    let one = construct_type(1.0, 20).unwrap();
    assert!(one.quotients().iter().all(|a| *a == big(1)));
    let two = construct_type(2.0, 10).unwrap();
    let qs = two.denominators();
    for w in qs.windows(2).skip(3) {
        let r = ergolab::diophantine::ln_big(&w[1]) / ergolab::diophantine::ln_big(&w[0]);
        assert!((1.9..2.1).contains(&r), "{r}");
    }
    assert!(construct_type(0.9, 5).is_err());
}

#[test]
fn y_xi_pair_examples() {
    let pair = construct_y_xi_pair(4.0, 8).unwrap();
    assert!(pair.certified());
    for cf in [&pair.theta, &pair.theta_prime] {
        let t = cf.type_estimate(cf.depth()).unwrap();
        assert!(t.gamma.is_finite() && t.gamma >= 4.0 - 0.05, "{}", t.gamma);
    }
    assert!(construct_y_xi_pair(1.0001, 6).unwrap().certified());
}

#[test]
fn rotation_distance_along_fibonacci() {
    let g = ContinuedFraction::golden(60);
    let qs = g.denominators();
    for w in qs.windows(2).skip(2).take(40) {
        let d = rotation_distance(&g, &w[0]);
        let q1: f64 = w[1].to_string().parse().unwrap();
        assert!(d > 1.0 / (2.0 * q1) && d < 1.0 / q1, "q = {}", w[0]);
    }
}

#[test]
fn tower_examples() {
    let spec = TowerSpec::new(0.5, 1000).unwrap();
    // a point in branch 3: find one by scanning the base
    let x = (0..100_000).map(|i| i as f64 / 100_000.0).find(|&x| spec.branch_of(x) == 3).unwrap();
    let p = tower_step(&spec, TowerPoint { base: x, level: 0 });
    assert_eq!(p, TowerPoint { base: x, level: 1 });
    let p = tower_step(&spec, TowerPoint { base: x, level: 2 });
    assert_eq!(p.level, 0);
    assert_abs_diff_eq!(p.base, spec.map_base(x, 3), epsilon = 0.0);
}

#[test]
fn slope_examples() {
    let ns: Vec<u64> = (0..40).map(|k| (10f64 * 1.2f64.powi(k)).ceil() as u64).collect();
    let tr = |f: &dyn Fn(f64) -> f64| ProcessTrace::from_parts(TraceKind::Series, ns.clone(), ns.iter().map(|&n| f(n as f64)).collect()).unwrap();
    assert_abs_diff_eq!(loglog_slope(&tr(&|n| n * n), 0.5).unwrap().slope, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(loglog_slope(&tr(&|_| 7.0), 0.5).unwrap().slope, 0.0, epsilon = 1e-12);

    let ns: Vec<u64> = (0..=30).map(|k| 10f64.powf(4.0 + 0.1 * k as f64).round() as u64).collect();
    let t = ProcessTrace::from_parts(TraceKind::Series, ns.clone(), ns.iter().map(|&n| (n as f64).sqrt() * (n as f64).ln().powi(2)).collect()).unwrap();
    let s = loglog_slope(&t, 1.0).unwrap().slope;
    // local slope is 1/2 + 2/ln n; the secant over the range is the oracle
    let secant = 0.5 + 2.0 * ((1e7f64).ln().ln() - (1e4f64).ln().ln()) / (1e3f64).ln();
    assert_abs_diff_eq!(s, secant, epsilon = 0.005);
    assert!(s > 0.62, "log pollution {s}");
}

#[test]
fn tail_extreme_examples() {
    assert_eq!(tail_liminf_limsup(&[0.7; 16], 0.25).unwrap(), (0.7, 0.7));
    let alt: Vec<f64> = (0..32).map(|i| if (i / 4) % 2 == 0 { 1.0 } else { 3.0 }).collect();
    assert_eq!(tail_liminf_limsup(&alt, 0.5).unwrap(), (1.0, 3.0));
    assert!(tail_liminf_limsup(&[1.0; 11], 0.5).is_err());
}

#[test]
fn bound_inversion_round_trip() {
    let xs: Vec<f64> = (1..=50).map(|i| i as f64 * 10.0).collect();
    let l = TabulatedFn::from_fn(xs.clone(), |n| n.sqrt()).unwrap();
    let inv = invert_monotone_bound(&l, 0.0).unwrap();
    for &x in &xs {
        assert_abs_diff_eq!(inv.eval(l.eval(x)), x, epsilon = 1e-9 * x);
    }
    let shifted = invert_monotone_bound(&l, 1.0).unwrap();
    assert_abs_diff_eq!(shifted.eval(l.eval(100.0) - 1.0), 100.0, epsilon = 1e-9);
    assert!(TabulatedFn::new(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0]).is_err());
}

#[test]
fn circle_exactness() {
    let t = Circle::from_f64(0.3);
    let mut acc = Circle::ZERO;
    for _ in 0..1000 {
        acc = acc + t;
    }
    assert_eq!(acc, t.times(1000));
    assert!(Circle(u128::MAX).to_f64() < 1.0);
}
