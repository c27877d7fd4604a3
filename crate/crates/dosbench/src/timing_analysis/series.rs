//! Timestamp series and analysis-phase extraction.

use crate::device_sim::{SolutionSample, GPS_WEEK_US};

use super::AnalysisError;

/// Paired sampling/processing timestamp series, microsecond resolution.
///
/// `tow` is the sampling clock (strictly increasing); `sys` is the
/// processing clock read when each sample was emitted. Timestamps are
/// kept as integer microseconds so that constant clock offsets and
/// constant latencies cancel exactly in differenced metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingSeries {
    tow_us: Vec<u64>,
    sys_us: Vec<u64>,
}

impl TimingSeries {
    pub fn new(tow_us: Vec<u64>, sys_us: Vec<u64>) -> Result<Self, AnalysisError> {
        if tow_us.len() != sys_us.len() {
            return Err(AnalysisError::LengthMismatch {
                tow: tow_us.len(),
                sys: sys_us.len(),
            });
        }
        for (i, pair) in tow_us.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                // A backwards jump of more than half a week is the GPS
                // week rollover; anything else is disordered input.
                if pair[0] - pair[1] > GPS_WEEK_US / 2 {
                    return Err(AnalysisError::TowWraparound { index: i + 1 });
                }
                return Err(AnalysisError::NonMonotonicTow { index: i + 1 });
            }
        }
        Ok(Self { tow_us, sys_us })
    }

    pub fn from_samples(samples: &[SolutionSample]) -> Result<Self, AnalysisError> {
        Self::new(
            samples.iter().map(|s| s.tow_us).collect(),
            samples.iter().map(|s| s.sys_time_us).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tow_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tow_us.is_empty()
    }

    pub fn tow_us(&self) -> &[u64] {
        &self.tow_us
    }

    pub fn sys_us(&self) -> &[u64] {
        &self.sys_us
    }

    // Subsequences of a valid series stay valid.
    pub(super) fn from_validated(tow_us: Vec<u64>, sys_us: Vec<u64>) -> Self {
        Self { tow_us, sys_us }
    }
}

/// The analysis windows: a clean reference phase, a discarded guard band
/// around the attack start, and the attack phase.
///
/// The guard band exists because timed initiation of recordings and
/// attacks carries small uncertainties; nothing inside it is ever
/// analyzed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseWindow {
    /// Reference phase is `[0, reference_end_s)`.
    pub reference_end_s: f64,
    /// Guard band `[reference_end_s, gap_end_s)` is discarded.
    pub gap_end_s: f64,
    /// Attack phase is `[gap_end_s, run_end_s]`.
    pub run_end_s: f64,
}

impl PhaseWindow {
    /// Windows for an attack initiated at `attack_start_s` in a run of
    /// `duration_s`, with a two-second guard band on each side of the
    /// attack start.
    pub fn from_attack_schedule(attack_start_s: f64, duration_s: f64) -> Self {
        Self {
            reference_end_s: (attack_start_s - 2.0).max(0.0),
            gap_end_s: (attack_start_s + 2.0).min(duration_s),
            run_end_s: duration_s,
        }
    }
}

impl Default for PhaseWindow {
    /// The standard 30 s protocol: attack at t = 10 s, reference
    /// `[0 s, 8 s)`, gap `[8 s, 12 s)`, attack `[12 s, 30 s]`.
    fn default() -> Self {
        Self::from_attack_schedule(10.0, 30.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Reference,
    Attack,
}

/// Select the subsequence whose run-relative sampling time falls inside
/// the chosen phase. `t0_us` is the tow value corresponding to run start.
/// An empty result is valid; downstream metrics report absence.
pub fn extract_phase(
    series: &TimingSeries,
    window: &PhaseWindow,
    phase: Phase,
    t0_us: u64,
) -> TimingSeries {
    let (lo_us, hi_us, upper_inclusive) = match phase {
        Phase::Reference => (0u64, secs_to_us(window.reference_end_s), false),
        Phase::Attack => (secs_to_us(window.gap_end_s), secs_to_us(window.run_end_s), true),
    };
    let mut tow = Vec::new();
    let mut sys = Vec::new();
    for i in 0..series.len() {
        let Some(rel) = series.tow_us[i].checked_sub(t0_us) else {
            continue; // before run start
        };
        let in_phase = rel >= lo_us && if upper_inclusive { rel <= hi_us } else { rel < hi_us };
        if in_phase {
            tow.push(series.tow_us[i]);
            sys.push(series.sys_us[i]);
        }
    }
    TimingSeries::from_validated(tow, sys)
}

fn secs_to_us(s: f64) -> u64 {
    (s * 1e6).round() as u64
}
