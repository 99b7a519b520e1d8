use super::map::{LsvBranch, MapSpec, Point};
use super::schedule::CheckpointSchedule;
use crate::circle::{u128_to_unit, Circle};
use crate::error::{Error, Result};
use crate::rng::{DigitStream, OrbitSeed};

const TOP: u128 = 1u128 << 127;

/// A process fed by the orbit engine.
///
/// For `t = 0, 1, ...` the engine first calls [`Monitor::checkpoint`] if `t`
/// is a checkpoint, stops if `t = n_max`, and otherwise calls
/// [`Monitor::observe`] with the state `f^t(x)` before stepping.
///
/// Slices of `&mut dyn Monitor` and tuples of monitors are monitors too, so
/// several processes can share one pass over the orbit.
pub trait Monitor {
    fn observe(&mut self, t: u64, p: &Point) -> Result<()>;

    /// Records the process value at checkpoint `n`; `p` is `f^n(x)`.
    fn checkpoint(&mut self, n: u64, p: &Point);

    /// True once further observations cannot change any recorded output.
    fn settled(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    Lsv(LsvBranch),
    Doubling,
    Tent,
    Rotation(Circle),
    Skew1(Circle),
    Skew2(Circle, Circle),
}

#[derive(Clone, Copy, Debug)]
enum Base {
    Float(f64),
    /// First 128 binary digits of the base coordinate; further digits are
    /// drawn from the orbit's digit stream as they shift in.
    Window(u128),
    None,
}

/// A running orbit.
///
/// The LSV base is iterated in `f64`; rounding on the left branch keeps
/// refreshing the low digits. Doubling and tent bases only shift digits, so
/// in `f64` every orbit would reach 0 within 53 steps. They are kept as an
/// exact 128-bit window fed by a seeded digit stream instead, which realises
/// the orbit of a point whose expansion continues at random. Fibers are exact
/// fixed-point values.
#[derive(Clone, Debug)]
pub struct Orbit {
    kernel: Kernel,
    base: Base,
    fibers: [Circle; 2],
    dim: usize,
    digits: DigitStream,
    time: u64,
    seed: Option<OrbitSeed>,
    /// The orbit started on the neutral fixed point and may stay there.
    fixed_start: bool,
}

impl Orbit {
    /// Starts an orbit at `p0`, drawing extra digits from `seed`.
    pub fn new(map: &MapSpec, p0: &Point, seed: OrbitSeed) -> Result<Self> {
        map.validate(p0)?;
        let mut digits = DigitStream::from_seed(seed);
        let kernel = match map {
            MapSpec::Lsv { alpha } => Kernel::Lsv(LsvBranch::new(*alpha)?),
            MapSpec::Doubling => Kernel::Doubling,
            MapSpec::Tent => Kernel::Tent,
            MapSpec::CircleRotation { theta } => Kernel::Rotation(theta.fixed()),
            MapSpec::SkewDoublingCircle { theta } => Kernel::Skew1(theta.fixed()),
            MapSpec::SkewDoublingTorus2 { theta1, theta2 } => Kernel::Skew2(theta1.fixed(), theta2.fixed()),
        };
        let base = match kernel {
            Kernel::Lsv(_) => Base::Float(p0.base),
            Kernel::Rotation(_) => Base::None,
            _ => Base::Window(window_from_f64(p0.base, &mut digits)),
        };
        let mut fibers = [Circle::ZERO; 2];
        fibers[..p0.fibers().len()].copy_from_slice(p0.fibers());
        Ok(Orbit {
            kernel,
            base,
            fibers,
            dim: map.fiber_dim(),
            digits,
            time: 0,
            seed: Some(seed),
            fixed_start: p0.base == 0.0,
        })
    }

    /// Starts an orbit whose base window is filled entirely from the digit stream.
    pub fn random(map: &MapSpec, fibers: &[Circle], seed: OrbitSeed) -> Result<Self> {
        let mut digits = DigitStream::from_seed(seed);
        let w = digits.next_u128();
        let p = match map {
            MapSpec::CircleRotation { .. } => Point::circle(fibers.first().copied().unwrap_or(Circle(w))),
            _ => Point::skew(u128_to_unit(w), fibers),
        };
        let mut orbit = Orbit::new(map, &p, seed)?;
        if let Base::Window(_) = orbit.base {
            orbit.base = Base::Window(w);
        }
        Ok(orbit)
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    #[inline]
    pub fn point(&self) -> Point {
        let x = match self.base {
            Base::Float(x) => x,
            Base::Window(w) => u128_to_unit(w),
            Base::None => 0.0,
        };
        Point::raw(x, self.fibers, self.dim as u8)
    }

    /// Exact base digits for the shift-type maps.
    pub fn base_window(&self) -> Option<u128> {
        match self.base {
            Base::Window(w) => Some(w),
            _ => None,
        }
    }

    #[inline]
    pub fn step(&mut self) -> Result<()> {
        let digits = &mut self.digits;
        let ok = match (&self.kernel, &mut self.base) {
            (Kernel::Lsv(b), Base::Float(x)) => lsv_step(b, x, self.fixed_start),
            (Kernel::Doubling, Base::Window(w)) => {
                doubling_step(w, digits);
                true
            }
            (Kernel::Tent, Base::Window(w)) => {
                tent_step(w, digits);
                true
            }
            (Kernel::Rotation(t), _) => {
                self.fibers[0] = self.fibers[0] + *t;
                true
            }
            (Kernel::Skew1(t), Base::Window(w)) => {
                let mut s = (*w, self.fibers[0]);
                skew1_step(&mut s, *t, digits);
                (*w, self.fibers[0]) = s;
                true
            }
            (Kernel::Skew2(t1, t2), Base::Window(w)) => {
                let mut s = (*w, self.fibers[0], self.fibers[1]);
                skew2_step(&mut s, *t1, *t2, digits);
                (*w, self.fibers[0], self.fibers[1]) = s;
                true
            }
            _ => unreachable!("kernel and base representation disagree"),
        };
        if !ok {
            return Err(self.singular(self.time));
        }
        self.time += 1;
        Ok(())
    }

    fn singular(&self, time: u64) -> Error {
        Error::Singular {
            time,
            seed: self.seed.map(|s| (s.master, s.index)),
            what: "orbit is stuck on the neutral fixed point 0".into(),
        }
    }

    /// Drives the monitor along the checkpoint schedule.
    ///
    /// Returns the number of steps taken, which is smaller than `n_max` when
    /// the monitor settled early.
    pub fn run<M: Monitor + ?Sized>(&mut self, schedule: &CheckpointSchedule, monitor: &mut M) -> Result<u64> {
        let start = self.time;
        let dim = self.dim as u8;
        let f = self.fibers;
        let fixed_start = self.fixed_start;
        let digits = &mut self.digits;
        let res = match (self.kernel.clone(), self.base) {
            (Kernel::Lsv(b), Base::Float(x)) => {
                let (x, r) = drive(schedule, monitor, &mut self.time, x, digits, |x| Point::raw(*x, f, dim), |x, _| {
                    lsv_step(&b, x, fixed_start)
                });
                self.base = Base::Float(x);
                r
            }
            (Kernel::Doubling, Base::Window(w)) => {
                let (w, r) = drive(schedule, monitor, &mut self.time, w, digits, |w| Point::raw(u128_to_unit(*w), f, dim), |w, d| {
                    doubling_step(w, d);
                    true
                });
                self.base = Base::Window(w);
                r
            }
            (Kernel::Tent, Base::Window(w)) => {
                let (w, r) = drive(schedule, monitor, &mut self.time, w, digits, |w| Point::raw(u128_to_unit(*w), f, dim), |w, d| {
                    tent_step(w, d);
                    true
                });
                self.base = Base::Window(w);
                r
            }
            (Kernel::Rotation(t), _) => {
                let (c, r) = drive(schedule, monitor, &mut self.time, f[0], digits, |c| Point::raw(0.0, [*c, Circle::ZERO], dim), |c, _| {
                    *c = *c + t;
                    true
                });
                self.fibers[0] = c;
                r
            }
            (Kernel::Skew1(t), Base::Window(w)) => {
                let ((w, c), r) = drive(
                    schedule,
                    monitor,
                    &mut self.time,
                    (w, f[0]),
                    digits,
                    |s| Point::raw(u128_to_unit(s.0), [s.1, Circle::ZERO], dim),
                    |s, d| {
                        skew1_step(s, t, d);
                        true
                    },
                );
                self.base = Base::Window(w);
                self.fibers[0] = c;
                r
            }
            (Kernel::Skew2(t1, t2), Base::Window(w)) => {
                let ((w, c1, c2), r) = drive(
                    schedule,
                    monitor,
                    &mut self.time,
                    (w, f[0], f[1]),
                    digits,
                    |s| Point::raw(u128_to_unit(s.0), [s.1, s.2], dim),
                    |s, d| {
                        skew2_step(s, t1, t2, d);
                        true
                    },
                );
                self.base = Base::Window(w);
                self.fibers = [c1, c2];
                r
            }
            _ => unreachable!("kernel and base representation disagree"),
        };
        match res {
            Ok(()) => Ok(self.time - start),
            Err(Stop::Singular(t)) => Err(self.singular(t)),
            Err(Stop::Monitor(e)) => Err(e),
        }
    }
}

enum Stop {
    Singular(u64),
    Monitor(Error),
}

/// The hot loop. The state lives in locals so that it stays in registers.
#[inline(always)]
fn drive<S: Copy, M: Monitor + ?Sized>(
    schedule: &CheckpointSchedule,
    monitor: &mut M,
    time: &mut u64,
    mut state: S,
    digits: &mut DigitStream,
    point: impl Fn(&S) -> Point,
    mut step: impl FnMut(&mut S, &mut DigitStream) -> bool,
) -> (S, std::result::Result<(), Stop>) {
    let start = *time;
    let mut t = 0u64;
    for &cp in schedule.points() {
        while t < cp {
            if let Err(e) = monitor.observe(t, &point(&state)) {
                *time = start + t;
                return (state, Err(Stop::Monitor(e)));
            }
            if !step(&mut state, digits) {
                *time = start + t;
                return (state, Err(Stop::Singular(start + t)));
            }
            t += 1;
        }
        monitor.checkpoint(cp, &point(&state));
        if monitor.settled() {
            break;
        }
    }
    *time = start + t;
    (state, Ok(()))
}

#[inline(always)]
fn lsv_step(b: &LsvBranch, x: &mut f64, fixed_start: bool) -> bool {
    if *x == 0.0 && !fixed_start {
        return false;
    }
    *x = b.apply(*x);
    true
}

#[inline(always)]
fn doubling_step(w: &mut u128, digits: &mut DigitStream) {
    *w = (*w << 1) | digits.bit();
}

#[inline(always)]
fn tent_step(w: &mut u128, digits: &mut DigitStream) {
    let shifted = if *w & TOP != 0 { !(*w << 1) } else { *w << 1 };
    *w = (shifted & !1) | digits.bit();
}

#[inline(always)]
fn skew1_step(s: &mut (u128, Circle), t: Circle, digits: &mut DigitStream) {
    let upper = s.0 & TOP != 0;
    s.0 = (s.0 << 1) | digits.bit();
    if upper {
        s.1 = s.1 + t;
    }
}

#[inline(always)]
fn skew2_step(s: &mut (u128, Circle, Circle), t1: Circle, t2: Circle, digits: &mut DigitStream) {
    let upper = s.0 & TOP != 0;
    s.0 = (s.0 << 1) | digits.bit();
    if upper {
        s.1 = s.1 + t1;
        s.2 = s.2 + t2;
    }
}

impl Monitor for [&mut dyn Monitor] {
    #[inline]
    fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
        for m in self.iter_mut() {
            m.observe(t, p)?;
        }
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        for m in self.iter_mut() {
            m.checkpoint(n, p);
        }
    }

    fn settled(&self) -> bool {
        self.iter().all(|m| m.settled())
    }
}

impl<M: Monitor + ?Sized> Monitor for &mut M {
    #[inline]
    fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
        (**self).observe(t, p)
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        (**self).checkpoint(n, p)
    }

    fn settled(&self) -> bool {
        (**self).settled()
    }
}

macro_rules! tuple_monitor {
    ($($name:ident $idx:tt),+) => {
        impl<$($name: Monitor),+> Monitor for ($($name,)+) {
            #[inline]
            fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
                $(self.$idx.observe(t, p)?;)+
                Ok(())
            }

            fn checkpoint(&mut self, n: u64, p: &Point) {
                $(self.$idx.checkpoint(n, p);)+
            }

            fn settled(&self) -> bool {
                true $(&& self.$idx.settled())+
            }
        }
    };
}

tuple_monitor!(A 0, B 1);
tuple_monitor!(A 0, B 1, C 2);
tuple_monitor!(A 0, B 1, C 2, D 3);
tuple_monitor!(A 0, B 1, C 2, D 3, E 4);

fn window_from_f64(x: f64, digits: &mut DigitStream) -> u128 {
    // f64 values in [0, 1) are exact multiples of 2^-1074, but only 53
    // significant bits carry information; digits below 2^-64 are redrawn.
    let exact = (x * 2f64.powi(64)) as u128;
    (exact << 64) | (digits.next_u128() >> 64)
}

/// Iterates `map` from `p0` with the monitors attached.
///
/// Extra digits for shift-type bases are drawn from a stream keyed by the
/// bits of `p0`, so the call is deterministic.
pub fn iterate_with_checkpoints(
    map: &MapSpec,
    p0: &Point,
    schedule: &CheckpointSchedule,
    monitors: &mut [&mut dyn Monitor],
) -> Result<u64> {
    let seed = OrbitSeed::new(p0.base.to_bits(), 0);
    Orbit::new(map, p0, seed)?.run(schedule, monitors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::AngleSpec;

    #[test]
    fn window_doubling_tracks_f64() {
        let mut o = Orbit::new(&MapSpec::Doubling, &Point::interval(0.3), OrbitSeed::new(1, 0)).unwrap();
        for want in [0.6, 0.2, 0.4, 0.8, 0.6] {
            o.step().unwrap();
            assert!((o.point().base - want).abs() < 1e-14);
        }
    }

    #[test]
    fn doubling_does_not_collapse() {
        let mut o = Orbit::new(&MapSpec::Doubling, &Point::interval(0.3), OrbitSeed::new(1, 0)).unwrap();
        let mut upper = 0;
        for _ in 0..10_000 {
            o.step().unwrap();
            if o.point().base >= 0.5 {
                upper += 1;
            }
        }
        assert!((4_000..6_000).contains(&upper));
    }

    #[test]
    fn tent_window_matches_map() {
        let mut o = Orbit::new(&MapSpec::Tent, &Point::interval(0.3), OrbitSeed::new(2, 0)).unwrap();
        let mut x: f64 = 0.3;
        for _ in 0..20 {
            o.step().unwrap();
            x = if x < 0.5 { 2.0 * x } else { 2.0 - 2.0 * x };
            assert!((o.point().base - x).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_is_exact_multiple() {
        let theta = AngleSpec::golden();
        let map = MapSpec::CircleRotation { theta: theta.clone() };
        let x0 = Circle(12345);
        let mut o = Orbit::new(&map, &Point::circle(x0), OrbitSeed::new(0, 0)).unwrap();
        for _ in 0..1000 {
            o.step().unwrap();
        }
        assert_eq!(o.point().fibers()[0], x0 + theta.fixed().times(1000));
    }
}
