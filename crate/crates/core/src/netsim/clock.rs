use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// A host clock relative to true simulation time: `local = true * drift + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockModel {
    /// Signed offset in nanoseconds.
    pub offset_ns: i64,
    pub drift: f64,
}

impl Default for ClockModel {
    fn default() -> Self {
        Self {
            offset_ns: 0,
            drift: 1.0,
        }
    }
}

impl ClockModel {
    pub fn with_offset_ns(offset_ns: i64) -> Self {
        Self {
            offset_ns,
            ..Self::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        self.offset_ns == 0 && self.drift == 1.0
    }

    pub fn local(&self, true_time: SimTime) -> SimTime {
        if self.is_identity() {
            return true_time;
        }
        let scaled = (true_time.as_nanos() as f64 * self.drift).round() as i128;
        SimTime::from_nanos((scaled + self.offset_ns as i128).clamp(0, u64::MAX as i128) as u64)
    }

    /// True time at which this clock reads `local`.
    pub fn to_true(&self, local: SimTime) -> SimTime {
        if self.is_identity() {
            return local;
        }
        let shifted = local.as_nanos() as i128 - self.offset_ns as i128;
        let t = (shifted as f64 / self.drift).round();
        SimTime::from_nanos(t.clamp(0.0, u64::MAX as f64) as u64)
    }
}

/// Reading of `clock` at `true_time`.
pub fn local_clock(clock: &ClockModel, true_time: SimTime) -> SimTime {
    clock.local(true_time)
}
