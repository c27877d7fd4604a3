//! Decoded telemetry samples: one position solution with its two clocks.

use serde::{Deserialize, Serialize};

/// Microseconds in one GPS week; `tow_us` stays strictly below this.
pub const GPS_WEEK_US: u64 = 604_800_000_000;

/// RTK solution quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixStatus {
    None,
    Float,
    Fixed,
}

impl FixStatus {
    pub fn as_u8(self) -> u8 {
        match self {
            FixStatus::None => 0,
            FixStatus::Float => 1,
            FixStatus::Fixed => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(FixStatus::None),
            1 => Some(FixStatus::Float),
            2 => Some(FixStatus::Fixed),
            _ => None,
        }
    }
}

/// One decoded position solution.
///
/// `tow_us` is the sampling timestamp in microseconds of GPS week — it is
/// tied to when the measurement was taken and is never shifted by
/// processing delays. `sys_time_us` is the device's internal clock at the
/// moment the solution was emitted, so it carries the processing latency
/// on top of an arbitrary constant clock offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSample {
    pub tow_us: u64,
    pub sys_time_us: u64,
    pub east_mm: i32,
    pub north_mm: i32,
    pub up_mm: i32,
    pub fix_status: FixStatus,
}
