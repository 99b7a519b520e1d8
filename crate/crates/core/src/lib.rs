//! Simulation of Birkhoff sums, maxima, hitting times and shrinking-target
//! counts for heavy-tailed observables over intermittent maps, circle
//! rotations, skew products and Young towers.
//!
//! The crate is organised by concern:
//!
//! - [`dynamics`]: maps, exact orbit engines, checkpoint schedules and the
//!   induced (first-return) system of the LSV map.
//! - [`observables`]: distance-based observables and their tail metadata.
//! - [`processes`]: monitors that turn an orbit into process traces.
//! - [`diophantine`]: continued fractions, Diophantine type and exact
//!   rotation hitting times.
//! - [`tower`]: Young towers with polynomial return tails.
//! - [`estimators`]: log-log slopes, tail ratios, bound inversion and
//!   ensemble summaries.
//!
//! ```
//! use ergolab::dynamics::{iterate_with_checkpoints, CheckpointSchedule, MapSpec, Point};
//! use ergolab::observables::{DistanceOn, ObservableSpec};
//! use ergolab::processes::BirkhoffMaxMonitor;
//!
//! let map = MapSpec::lsv(0.5).unwrap();
//! let phi = ObservableSpec::dist_power(Point::interval(0.8), 1.0, DistanceOn::Base);
//! let mut sums = BirkhoffMaxMonitor::new(phi);
//! let schedule = CheckpointSchedule::geometric(2.0, 1 << 12).unwrap();
//! iterate_with_checkpoints(&map, &Point::interval(0.3141), &schedule, &mut [&mut sums]).unwrap();
//! let (s, m) = sums.into_traces();
//! assert!(s.values().iter().zip(m.values()).all(|(s, m)| m <= s));
//! ```

pub mod circle;
pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod observables;
pub mod processes;
pub mod rng;
pub mod tower;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    mod orbits {}
    #[doc = include_str!("../../../book/src/induced.md")]
    mod induced {}
    #[doc = include_str!("../../../book/src/processes.md")]
    mod processes {}
    #[doc = include_str!("../../../book/src/diophantine.md")]
    mod diophantine {}
    #[doc = include_str!("../../../book/src/towers.md")]
    mod towers {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
