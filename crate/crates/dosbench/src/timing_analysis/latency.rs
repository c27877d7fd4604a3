//! Latency-distribution statistics for control-loop benchmark records.

use serde::{Deserialize, Serialize};

use crate::control_workload::LatencyRecord;

use super::metrics::quantile_sorted;
use super::AnalysisError;

/// Histogram prepared for plot emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyHistogram {
    /// Bin edges in seconds, one more than `counts`.
    pub edges_s: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub median_s: f64,
    /// Population standard deviation.
    pub std_s: f64,
    pub min_s: f64,
    pub max_s: f64,
    /// Width of the lower-99-percentile interval: `Q_0.99 - min`.
    pub lower99_width_s: f64,
    pub p99_s: f64,
    pub histogram: LatencyHistogram,
}

const HISTOGRAM_BINS: usize = 50;

/// Summarize per-iteration durations `t_exit - t_enter`.
pub fn latency_summary(records: &[LatencyRecord]) -> Result<LatencySummary, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut durations_s: Vec<f64> = records
        .iter()
        .map(|r| (r.t_exit_us - r.t_enter_us) as f64 / 1e6)
        .collect();
    durations_s.sort_by(f64::total_cmp);

    let n = durations_s.len();
    let min_s = durations_s[0];
    let max_s = durations_s[n - 1];
    let median_s = quantile_sorted(&durations_s, 0.5);
    let p99_s = quantile_sorted(&durations_s, 0.99);
    let mean = durations_s.iter().sum::<f64>() / n as f64;
    let var = durations_s.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;

    Ok(LatencySummary {
        count: n,
        median_s,
        std_s: var.sqrt(),
        min_s,
        max_s,
        lower99_width_s: p99_s - min_s,
        p99_s,
        histogram: histogram(&durations_s, min_s, max_s),
    })
}

fn histogram(sorted_s: &[f64], min_s: f64, max_s: f64) -> LatencyHistogram {
    if max_s <= min_s {
        // degenerate distribution: one bin holding everything
        return LatencyHistogram {
            edges_s: vec![min_s, max_s],
            counts: vec![sorted_s.len() as u64],
        };
    }
    let width = (max_s - min_s) / HISTOGRAM_BINS as f64;
    let edges_s: Vec<f64> = (0..=HISTOGRAM_BINS).map(|i| min_s + i as f64 * width).collect();
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &d in sorted_s {
        let idx = (((d - min_s) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[idx] += 1;
    }
    LatencyHistogram { edges_s, counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: u64, enter_us: u64, exit_us: u64) -> LatencyRecord {
        LatencyRecord {
            iteration: i,
            t_enter_us: enter_us,
            t_exit_us: exit_us,
        }
    }

    #[test]
    fn identical_durations_collapse_the_summary() {
        let records: Vec<_> = (0..100)
            .map(|i| record(i, i * 10_000, i * 10_000 + 7_000))
            .collect();
        let s = latency_summary(&records).unwrap();
        assert!((s.median_s - 0.007).abs() < 1e-12);
        // identical values: the variance is pure rounding residue
        assert!(s.std_s < 1e-12);
        assert_eq!(s.lower99_width_s, 0.0);
        assert_eq!(s.min_s, s.max_s);
        assert_eq!(s.histogram.counts, vec![100]);
    }

    #[test]
    fn uniform_1_to_100_ms_median_is_50_5_ms() {
        let records: Vec<_> = (1..=100u64)
            .map(|i| record(i, i * 1_000_000, i * 1_000_000 + i * 1_000))
            .collect();
        let s = latency_summary(&records).unwrap();
        assert!((s.median_s - 0.0505).abs() < 1e-12);
        assert!((s.min_s - 0.001).abs() < 1e-12);
        assert!((s.max_s - 0.100).abs() < 1e-12);
        // Q99 of 1..100 ms under linear interpolation: 99.01 ms
        assert!((s.p99_s - 0.09901).abs() < 1e-9);
        assert!((s.lower99_width_s - (0.09901 - 0.001)).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_undefined() {
        assert!(matches!(
            latency_summary(&[]),
            Err(AnalysisError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn histogram_counts_cover_every_record() {
        let records: Vec<_> = (0..1000u64)
            .map(|i| record(i, 0, 1_000 + (i * 37) % 9_000))
            .collect();
        let s = latency_summary(&records).unwrap();
        assert_eq!(s.histogram.counts.iter().sum::<u64>(), 1000);
        assert_eq!(s.histogram.edges_s.len(), s.histogram.counts.len() + 1);
    }

    #[test]
    fn ordering_invariants_hold() {
        let records: Vec<_> = (0..500u64)
            .map(|i| record(i, i, i + 100 + (i * 31) % 400))
            .collect();
        let s = latency_summary(&records).unwrap();
        assert!(s.min_s <= s.median_s && s.median_s <= s.max_s);
        assert!(s.lower99_width_s >= 0.0);
        assert!(s.p99_s <= s.max_s);
    }
}
