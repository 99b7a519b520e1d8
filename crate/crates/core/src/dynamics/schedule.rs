use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Strictly increasing checkpoint times ending at `n_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointSchedule {
    points: Vec<u64>,
}

impl CheckpointSchedule {
    /// Geometric schedule `ceil(ratio^k)`, deduplicated, with `n_max` appended.
    ///
    /// `n_max = 0` gives the empty schedule.
    pub fn geometric(ratio: f64, n_max: u64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::Schedule(format!("ratio must exceed 1, got {ratio}")));
        }
        let mut points = Vec::new();
        if n_max == 0 {
            return Ok(CheckpointSchedule { points });
        }
        let mut k = 0i32;
        loop {
            let v = ratio.powi(k).ceil();
            if v >= n_max as f64 {
                break;
            }
            let v = v as u64;
            if points.last() != Some(&v) {
                points.push(v);
            }
            k += 1;
        }
        points.push(n_max);
        Ok(CheckpointSchedule { points })
    }

    /// Explicit checkpoints; they must be strictly increasing and positive.
    pub fn explicit(points: Vec<u64>) -> Result<Self> {
        if points.first() == Some(&0) {
            return Err(Error::Schedule("checkpoints start at 1".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schedule("checkpoints must be strictly increasing".into()));
        }
        Ok(CheckpointSchedule { points })
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    pub fn n_max(&self) -> u64 {
        self.points.last().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
