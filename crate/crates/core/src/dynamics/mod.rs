//! Maps, orbits and checkpoint schedules.

mod engine;
mod induced;
mod map;
mod schedule;

pub use engine::{iterate_with_checkpoints, Monitor, Orbit};
pub use induced::{InducedMode, InducedOrbit, InducedSystem};
pub use map::{step, AngleSpec, LsvBranch, MapSpec, Point};
pub use schedule::CheckpointSchedule;
