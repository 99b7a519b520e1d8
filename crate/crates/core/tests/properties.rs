use ergolab::circle::Circle;
use ergolab::diophantine::{rotation_distance, ContinuedFraction};
use ergolab::dynamics::{AngleSpec, CheckpointSchedule, InducedMode, InducedOrbit, InducedSystem, MapSpec, Monitor, Orbit, Point};
use ergolab::estimators::{invert_monotone_bound, loglog_slope, TabulatedFn};
use ergolab::observables::{symbolic_coding_distance, DistanceOn, ObservableKind, ObservableSpec, Psi};
use ergolab::processes::{
    check_max_hit_duality, erdos_renyi, BcCounter, BirkhoffMaxMonitor, ErdosRenyiMonitor, HittingMonitor, HittingTargets, OrbitRecorder,
    ProcessTrace, RunLengthMonitor, ShrinkingBalls, StateMonitor, TraceKind, WindowRule,
};
use ergolab::rng::OrbitSeed;
use ergolab::tower::{TowerOrbit, TowerSpec};
use ergolab::Result;
use num_bigint::BigUint;
use proptest::prelude::*;

fn seed(s: u64) -> OrbitSeed {
    OrbitSeed::new(s, 0)
}

fn map_strategy() -> impl Strategy<Value = MapSpec> {
    prop_oneof![
        (1.0f64..3.0).prop_map(|a| MapSpec::lsv(a).unwrap()),
        Just(MapSpec::Doubling),
        Just(MapSpec::Tent),
    ]
}

fn longest_run(symbols: &[u8], j: u8) -> u64 {
    let (mut best, mut cur) = (0, 0);
    for &s in symbols {
        cur = if s == j { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

/// Counts visits of the base to `[1/2, 1)` while checking the fibers.
struct FiberCheck {
    start: Vec<Circle>,
    thetas: Vec<Circle>,
    visits: u128,
    ok: bool,
}

impl Monitor for FiberCheck {
    fn observe(&mut self, _t: u64, p: &Point) -> Result<()> {
        for ((f, s), th) in p.fibers().iter().zip(&self.start).zip(&self.thetas) {
            self.ok &= *f == *s + th.times(self.visits);
        }
        if p.base >= 0.5 {
            self.visits += 1;
        }
        Ok(())
    }

    fn checkpoint(&mut self, _n: u64, _p: &Point) {}
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_arithmetic(a in any::<u128>(), b in any::<u128>(), n in 0u128..2000) {
        let (x, y) = (Circle(a), Circle(b));
        prop_assert_eq!(x + y - y, x);
        prop_assert_eq!(x.distance_fixed(y), y.distance_fixed(x));
        prop_assert!(x.distance_fixed(y) <= 1u128 << 127);
        prop_assert!(x.to_f64() < 1.0 && x.to_f64() >= 0.0);
        let mut acc = Circle::ZERO;
        for _ in 0..n {
            acc = acc + x;
        }
        prop_assert_eq!(acc, x.times(n));
    }

    #[test]
    fn max_hit_duality(map in map_strategy(), s in any::<u64>(), center in 0.55f64..0.95) {
        let phi = ObservableSpec::dist_power(Point::interval(center), 1.0, DistanceOn::Base);
        let levels: Vec<f64> = (0..30).map(|i| 2.0 * 1.5f64.powi(i)).collect();
        let sched = CheckpointSchedule::geometric(1.3, 20_000).unwrap();
        let mut bm = BirkhoffMaxMonitor::new(phi.clone());
        let mut h = HittingMonitor::new(HittingTargets::Levels { observable: phi, levels }, 0).unwrap();
        Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, &mut (&mut bm, &mut h)).unwrap();
        let record = h.record();
        let (sums, maxima) = bm.into_traces();
        prop_assert!(check_max_hit_duality(&maxima, &record).is_ok());
        prop_assert!(sums.check_monotone().is_ok());
        prop_assert!(maxima.check_monotone().is_ok());
        for (s, m) in sums.values().iter().zip(maxima.values()) {
            prop_assert!(s >= m);
        }
    }

    #[test]
    fn composition_matches_separate_runs(map in map_strategy(), s in any::<u64>()) {
        let sched = CheckpointSchedule::geometric(1.5, 5_000).unwrap();
        let phi = ObservableSpec::neg_log_dist(Point::interval(0.7), DistanceOn::Base);
        let run_alone = |m: &mut dyn Monitor| {
            Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, m).unwrap();
        };
        let mut a1 = BirkhoffMaxMonitor::new(phi.clone());
        let mut b1 = RunLengthMonitor::new(1);
        let mut c1 = StateMonitor::new();
        run_alone(&mut a1);
        run_alone(&mut b1);
        run_alone(&mut c1);
        let mut a2 = BirkhoffMaxMonitor::new(phi.clone());
        let mut b2 = RunLengthMonitor::new(1);
        let mut c2 = StateMonitor::new();
        Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, &mut (&mut a2, &mut b2, &mut c2)).unwrap();
        let mut a3 = BirkhoffMaxMonitor::new(phi);
        let mut b3 = RunLengthMonitor::new(1);
        let mut c3 = StateMonitor::new();
        Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, &mut [&mut a3 as &mut dyn Monitor, &mut b3, &mut c3][..]).unwrap();
        prop_assert_eq!(a1.clone().into_traces(), a2.into_traces());
        prop_assert_eq!(a1.into_traces(), a3.into_traces());
        prop_assert_eq!(b1.clone().into_trace(), b2.into_trace());
        prop_assert_eq!(b1.into_trace(), b3.into_trace());
        prop_assert_eq!(c1.points(), c2.points());
        prop_assert_eq!(c1.points(), c3.points());
    }

    #[test]
    fn skew_fibers_are_exact(s in any::<u64>(), f1 in any::<u128>(), f2 in any::<u128>(), depth in 3usize..12) {
        let theta = AngleSpec::from_cf(ContinuedFraction::from_u64(0, &vec![2; depth]).unwrap());
        let theta2 = AngleSpec::golden();
        let sched = CheckpointSchedule::geometric(2.0, 20_000).unwrap();
        let mut one = FiberCheck { start: vec![Circle(f1)], thetas: vec![theta.fixed()], visits: 0, ok: true };
        Orbit::random(&MapSpec::SkewDoublingCircle { theta: theta.clone() }, &[Circle(f1)], seed(s)).unwrap().run(&sched, &mut one).unwrap();
        prop_assert!(one.ok);
        let mut two = FiberCheck { start: vec![Circle(f1), Circle(f2)], thetas: vec![theta.fixed(), theta2.fixed()], visits: 0, ok: true };
        let map = MapSpec::SkewDoublingTorus2 { theta1: theta.clone(), theta2: theta2.clone() };
        Orbit::random(&map, &[Circle(f1), Circle(f2)], seed(s)).unwrap().run(&sched, &mut two).unwrap();
        prop_assert!(two.ok);
        let mut rot = FiberCheck { start: vec![Circle(f1)], thetas: vec![theta.fixed()], visits: 0, ok: true };
        // the rotation has no base; count every step instead
        struct Every<'a>(&'a mut FiberCheck);
        impl Monitor for Every<'_> {
            fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
                self.0.observe(t, &Point::skew(0.75, p.fibers()))
            }
            fn checkpoint(&mut self, _n: u64, _p: &Point) {}
        }
        Orbit::random(&MapSpec::CircleRotation { theta }, &[Circle(f1)], seed(s)).unwrap().run(&sched, &mut Every(&mut rot)).unwrap();
        prop_assert!(rot.ok);
    }

    #[test]
    fn symbolic_monitors_match_brute_force(map in map_strategy(), s in any::<u64>(), c in 0.1f64..2.0) {
        let sched = CheckpointSchedule::geometric(1.7, 3_000).unwrap();
        let mut rec = OrbitRecorder::new();
        let mut r1 = RunLengthMonitor::new(1);
        let mut r0 = RunLengthMonitor::new(0);
        let mut er = ErdosRenyiMonitor::new(1, WindowRule::LogScaled { c, alpha: 1.0 }, &sched);
        let mut erp = ErdosRenyiMonitor::new(0, WindowRule::Power { c: 0.3 }, &sched);
        Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, &mut (&mut rec, &mut r1, &mut r0, &mut er, &mut erp)).unwrap();
        let sym = rec.symbols();
        let inverted: Vec<u8> = sym.iter().map(|&x| 1 - x).collect();
        let (r1, r0, er, erp) = (r1.into_trace(), r0.into_trace(), er.into_trace(), erp.into_trace());
        for (j, &n) in sched.points().iter().enumerate() {
            let prefix = &sym[..n as usize];
            prop_assert_eq!(r1.values()[j], longest_run(prefix, 1) as f64);
            prop_assert_eq!(r0.values()[j], longest_run(prefix, 0) as f64);
            let k = WindowRule::LogScaled { c, alpha: 1.0 }.k(n).min(n as usize);
            prop_assert_eq!(er.values()[j], erdos_renyi(prefix, k).unwrap() as f64);
            let k = WindowRule::Power { c: 0.3 }.k(n).min(n as usize);
            prop_assert_eq!(erp.values()[j], erdos_renyi(&inverted[..n as usize], k).unwrap() as f64);
            // a run of ones at least K long fills a whole window
            if longest_run(prefix, 1) as usize >= k && k > 0 {
                prop_assert_eq!(erdos_renyi(prefix, k).unwrap() as usize, k);
            }
        }
    }

    #[test]
    fn hitting_matches_scan(map in map_strategy(), s in any::<u64>(), center in 0.0f64..1.0) {
        let radii: Vec<f64> = (1..14).map(|k| 0.5f64.powi(k)).collect();
        let sched = CheckpointSchedule::geometric(1.5, 50_000).unwrap();
        let mut rec = OrbitRecorder::new();
        let mut h = HittingMonitor::new(HittingTargets::Balls { center: Point::interval(center), on: DistanceOn::Base, radii: radii.clone() }, 1).unwrap();
        Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, &mut (&mut rec, &mut h)).unwrap();
        let record = h.record();
        for (r, tau) in radii.iter().zip(&record.times) {
            let scan = rec.bases.iter().enumerate().skip(1).find(|(_, &x)| (x - center).abs() <= *r).map(|(t, _)| t as u64);
            match scan {
                Some(t) => prop_assert_eq!(*tau, Some(t)),
                None => prop_assert!(tau.is_none() || *tau == Some(50_000)),
            }
        }
    }

    #[test]
    fn bc_counter_extremes(map in map_strategy(), s in any::<u64>()) {
        let sched = CheckpointSchedule::geometric(2.0, 4_096).unwrap();
        let whole = ShrinkingBalls::power(Point::interval(0.5), DistanceOn::Base, 1.0, 0.0, 1.0);
        let empty = ShrinkingBalls::power(Point::interval(0.5), DistanceOn::Base, 0.0, 0.0, 0.0);
        let (mut a, mut b) = (BcCounter::new(whole), BcCounter::new(empty));
        Orbit::random(&map, &[], seed(s)).unwrap().run(&sched, &mut (&mut a, &mut b)).unwrap();
        let (a, b) = (a.into_trace(), b.into_trace());
        for (j, &n) in sched.points().iter().enumerate() {
            prop_assert_eq!(a.values()[j], n as f64);
            prop_assert!(b.values()[j] <= 1.0);
        }
    }

    #[test]
    fn coding_distance_to_one_counts_leading_ones(bits in prop::collection::vec(any::<bool>(), 5..40)) {
        let x: f64 = bits.iter().enumerate().map(|(i, &b)| if b { 0.5f64.powi(i as i32 + 1) } else { 0.0 }).sum::<f64>() + 0.5f64.powi(45);
        let run = bits.iter().take_while(|&&b| b).count() as i32;
        let d = symbolic_coding_distance(x, 1.0, 50).unwrap();
        prop_assert_eq!(d.value, 0.5f64.powi(run + 1));
    }

    #[test]
    fn induced_returns_match_direct_orbit(alpha in 1.0f64..3.0, y0 in 0.5f64..1.0) {
        let sys = InducedSystem::with_depth(alpha, 64).unwrap();
        let mut induced = InducedOrbit::new(&sys, y0, InducedMode::Exact).unwrap();
        let mut clock = 0u64;
        let mut visits = Vec::new();
        // return times are heavy tailed; stop before one outgrows the recording
        while clock + sys.return_time(induced.current()) < 20_000 {
            let (_, r) = induced.advance().unwrap();
            clock += r;
            visits.push(clock);
        }
        let mut rec = OrbitRecorder::new();
        let sched = CheckpointSchedule::explicit(vec![clock + 1]).unwrap();
        let map = MapSpec::lsv(alpha).unwrap();
        Orbit::new(&map, &Point::interval(y0), seed(0)).unwrap().run(&sched, &mut rec).unwrap();
        let direct: Vec<u64> = rec.bases.iter().enumerate().skip(1).filter(|(_, &x)| x >= 0.5).map(|(t, _)| t as u64).collect();
        prop_assert_eq!(direct, visits);
    }

    #[test]
    fn fast_forward_return_times_follow_cells(alpha in 1.0f64..3.0, s in any::<u64>()) {
        let sys = InducedSystem::with_depth(alpha, 256).unwrap();
        let y0 = 0.5 + 0.5 * ergolab::rng::DigitStream::from_seed(seed(s)).uniform();
        let mut o = InducedOrbit::new(&sys, y0, InducedMode::FastForward { depth: 256 }).unwrap();
        for _ in 0..2_000 {
            let y = o.current();
            let (_, r) = o.advance().unwrap();
            prop_assert_eq!(r, sys.return_time(y));
        }
    }

    #[test]
    fn determinant_identity(qs in prop::collection::vec(1u64..1_000_000, 1..40)) {
        let cf = ContinuedFraction::from_u64(0, &qs).unwrap();
        let conv = cf.convergents(qs.len()).unwrap();
        for (k, w) in conv.windows(2).enumerate() {
            let lhs = &w[1].0 * &w[0].1;
            let rhs = &w[0].0 * &w[1].1;
            // p_k q_{k-1} - p_{k-1} q_k = (-1)^{k-1}
            if k % 2 == 0 {
                prop_assert_eq!(lhs, rhs + 1u32);
            } else {
                prop_assert_eq!(lhs + 1u32, rhs);
            }
        }
    }

    #[test]
    fn convergents_are_best_approximations(qs in prop::collection::vec(1u64..6, 4..12)) {
        let cf = ContinuedFraction::from_u64(0, &qs).unwrap();
        let theta = cf.fixed_point();
        let dist = |q: u64| theta.times(q as u128).distance_fixed(Circle::ZERO);
        for q_n in cf.denominators().into_iter().skip(1) {
            let q_n: u64 = q_n.try_into().unwrap();
            if q_n > 10_000 {
                break;
            }
            let best = (1..q_n).map(dist).min().unwrap_or(u128::MAX);
            prop_assert!(dist(q_n) < best);
            let exact = rotation_distance(&cf, &BigUint::from(q_n));
            prop_assert!((exact - Circle(dist(q_n)).to_f64()).abs() < 1e-12);
        }
    }

    #[test]
    fn tower_returns_at_branch_gaps(beta in 0.2f64..0.9, s in any::<u64>()) {
        let spec = TowerSpec::new(beta, 10_000).unwrap();
        let mut stepper = TowerOrbit::random(&spec, seed(s));
        let mut jumper = TowerOrbit::random(&spec, seed(s));
        for _ in 0..200 {
            let branch = spec.branch_of(stepper.point().base);
            let gap = jumper.next_return();
            prop_assert_eq!(gap, branch);
            for _ in 0..gap {
                prop_assert!(stepper.point().level < branch);
                stepper.step();
            }
            prop_assert_eq!(stepper.point(), jumper.point());
            prop_assert_eq!(stepper.time(), jumper.time());
        }
    }

    #[test]
    fn power_law_slopes(e in -3.0f64..3.0, c in 0.1f64..100.0) {
        let ns: Vec<u64> = (0..30).map(|k| 1u64 << k).collect();
        let t = ProcessTrace::from_parts(TraceKind::Series, ns.clone(), ns.iter().map(|&n| c * (n as f64).powf(e)).collect()).unwrap();
        prop_assert!((loglog_slope(&t, 0.5).unwrap().slope - e).abs() < 1e-9);
    }

    #[test]
    fn inverse_composes_to_identity(e in 0.2f64..3.0) {
        let xs: Vec<f64> = (1..=40).map(|i| i as f64 * 7.0).collect();
        let l = TabulatedFn::from_fn(xs.clone(), |x| x.powf(e)).unwrap();
        let inv = invert_monotone_bound(&l, 0.0).unwrap();
        for &x in &xs {
            prop_assert!((inv.eval(l.eval(x)) - x).abs() <= 1e-9 * x);
        }
    }

    #[test]
    fn dist_power_superlevel_sets_are_balls(c in 0.0f64..1.0, x in 0.0f64..1.0, k in prop_oneof![Just(1.0), Just(2.0), 0.3f64..3.0], n in 1.0f64..1e6) {
        let phi = ObservableSpec::dist_power(Point::interval(c), k, DistanceOn::Base);
        let d = (x - c).abs();
        prop_assert_eq!(phi.eval(&Point::interval(x)) >= n, d <= n.powf(-1.0 / k) || (d.powf(-k) - n).abs() <= 1e-9 * n);
    }

    #[test]
    fn eval_decreases_with_distance(c in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0, k in 0.3f64..3.0) {
        let (near, far) = if (a - c).abs() <= (b - c).abs() { (a, b) } else { (b, a) };
        let center = Point::interval(c);
        let psi = Psi::new("1/(t (1 - log t))", |t: f64| 1.0 / (t * (1.0 - t.ln())));
        let observables = [
            ObservableSpec::dist_power(center, k, DistanceOn::Base),
            ObservableSpec::neg_log_dist(center, DistanceOn::Base),
            ObservableSpec::new(ObservableKind::PsiOfDist { center, on: DistanceOn::Base, psi }),
        ];
        for phi in &observables {
            prop_assert!(phi.eval(&Point::interval(near)) >= phi.eval(&Point::interval(far)));
        }
    }

    #[test]
    fn coding_distance_symmetry_and_shift(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let d = symbolic_coding_distance(x, y, 40);
        prop_assume!(d.is_ok());
        let d = d.unwrap();
        prop_assert_eq!(symbolic_coding_distance(y, x, 40).unwrap(), d);
        if (x >= 0.5) == (y >= 0.5) && !d.truncated {
            let t = |v: f64| if v >= 0.5 { 2.0 * v - 1.0 } else { 2.0 * v };
            prop_assert_eq!(symbolic_coding_distance(t(x), t(y), 40).unwrap().value / 2.0, d.value);
        }
    }
}
