//! Sampling-timestamp metrics: mean rate, longest gap, and
//! double-difference jitter.

use serde::{Deserialize, Serialize};

use super::series::TimingSeries;
use super::AnalysisError;

/// Span-based mean sample rate: `(n - 1) / (tow_last - tow_first)`.
///
/// Robust to nonuniform sampling, unlike averaging reciprocal increments.
pub fn mean_sample_rate(series: &TimingSeries) -> Result<f64, AnalysisError> {
    let n = series.len();
    if n < 2 {
        return Err(AnalysisError::InsufficientSamples { needed: 2, got: n });
    }
    let tow = series.tow_us();
    let span_s = (tow[n - 1] - tow[0]) as f64 / 1e6;
    Ok((n - 1) as f64 / span_s)
}

/// Largest consecutive sampling-timestamp increment, in seconds. Any
/// increment beyond the nominal range means samples were dropped rather
/// than delayed, since the sampling clock is unaffected by processing.
pub fn longest_increment(series: &TimingSeries) -> Result<f64, AnalysisError> {
    let n = series.len();
    if n < 2 {
        return Err(AnalysisError::InsufficientSamples { needed: 2, got: n });
    }
    let max_us = series
        .tow_us()
        .windows(2)
        .map(|w| w[1] - w[0])
        .max()
        .unwrap();
    Ok(max_us as f64 / 1e6)
}

/// Per-pair double differences in microseconds:
/// `t_dd[i] = tow[i] - tow[i+1] + sys[i+1] - sys[i]`.
///
/// Both the constant offset between the two clocks and any constant
/// processing latency cancel, so the values are nonzero only where the
/// latency changes from one sample to the next.
pub fn double_differences(series: &TimingSeries) -> Vec<i64> {
    let tow = series.tow_us();
    let sys = series.sys_us();
    (0..series.len().saturating_sub(1))
        .map(|i| {
            let d_tow = tow[i] as i128 - tow[i + 1] as i128;
            let d_sys = sys[i + 1] as i128 - sys[i] as i128;
            (d_tow + d_sys) as i64
        })
        .collect()
}

/// Double-difference jitter: the `Q_0.95 - Q_0.05` spread of the
/// double differences, in seconds. Exactly zero for any constant-latency
/// series.
pub fn double_difference_jitter(series: &TimingSeries) -> Result<f64, AnalysisError> {
    double_difference_spread(series, 0.05, 0.95)
}

/// Jitter generalized to arbitrary quantile bounds.
pub fn double_difference_spread(
    series: &TimingSeries,
    q_lo: f64,
    q_hi: f64,
) -> Result<f64, AnalysisError> {
    let n = series.len();
    if n < 3 {
        return Err(AnalysisError::InsufficientSamples { needed: 3, got: n });
    }
    let mut dd: Vec<f64> = double_differences(series)
        .into_iter()
        .map(|v| v as f64 / 1e6)
        .collect();
    dd.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&dd, q_hi) - quantile_sorted(&dd, q_lo))
}

/// Quantile by linear interpolation of order statistics: for sorted `x`
/// of length m, the p-quantile interpolates between the order statistics
/// bracketing rank `(m - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty set");
    assert!((0.0..=1.0).contains(&p), "quantile probability out of range");
    let m = sorted.len();
    let h = (m - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = h - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Per-phase sampling metrics; fields are `None` when the phase holds too
/// few samples for the metric to be defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetrics {
    pub sample_count: usize,
    pub mean_sample_rate_hz: Option<f64>,
    pub longest_increment_s: Option<f64>,
    pub double_difference_jitter_s: Option<f64>,
}

/// Metrics for a single phase series.
pub fn phase_metrics(series: &TimingSeries) -> PhaseMetrics {
    PhaseMetrics {
        sample_count: series.len(),
        mean_sample_rate_hz: mean_sample_rate(series).ok(),
        longest_increment_s: longest_increment(series).ok(),
        double_difference_jitter_s: double_difference_jitter(series).ok(),
    }
}

/// Metrics pooled over several runs of the same phase.
///
/// Pooling merges the recordings without inventing cross-run adjacency:
/// the mean rate is total increments over total span, the longest
/// increment is the maximum across runs, and the jitter quantiles are
/// taken over the concatenated double-difference populations.
pub fn pooled_phase_metrics(runs: &[TimingSeries]) -> PhaseMetrics {
    let sample_count = runs.iter().map(TimingSeries::len).sum();

    let mut increments = 0usize;
    let mut span_us = 0u64;
    let mut longest_us: Option<u64> = None;
    let mut pooled_dd: Vec<f64> = Vec::new();

    for run in runs {
        let n = run.len();
        if n < 2 {
            continue;
        }
        let tow = run.tow_us();
        increments += n - 1;
        span_us += tow[n - 1] - tow[0];
        let run_longest = tow.windows(2).map(|w| w[1] - w[0]).max().unwrap();
        longest_us = Some(longest_us.map_or(run_longest, |cur| cur.max(run_longest)));
        pooled_dd.extend(double_differences(run).into_iter().map(|v| v as f64 / 1e6));
    }

    let mean_sample_rate_hz = (increments > 0 && span_us > 0)
        .then(|| increments as f64 / (span_us as f64 / 1e6));
    let double_difference_jitter_s = (pooled_dd.len() >= 2).then(|| {
        pooled_dd.sort_by(f64::total_cmp);
        quantile_sorted(&pooled_dd, 0.95) - quantile_sorted(&pooled_dd, 0.05)
    });

    PhaseMetrics {
        sample_count,
        mean_sample_rate_hz,
        longest_increment_s: longest_us.map(|us| us as f64 / 1e6),
        double_difference_jitter_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(tow: Vec<u64>, sys: Vec<u64>) -> TimingSeries {
        TimingSeries::new(tow, sys).unwrap()
    }

    fn constant_latency_series(n: usize, step_us: u64, latency_us: u64) -> TimingSeries {
        let tow: Vec<u64> = (0..n as u64).map(|i| 1_000_000 + i * step_us).collect();
        let sys: Vec<u64> = tow.iter().map(|t| t + latency_us).collect();
        series(tow, sys)
    }

    #[test]
    fn sixty_hz_rate_from_61_samples_over_one_second() {
        // 61 samples spanning exactly one second
        let tow: Vec<u64> = (0..61u64).map(|i| i * 1_000_000 / 60).collect();
        let mut tow = tow;
        *tow.last_mut().unwrap() = 1_000_000;
        let s = series(tow.clone(), tow);
        assert!((mean_sample_rate(&s).unwrap() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn rate_undefined_below_two_samples() {
        let s = series(vec![5], vec![5]);
        assert!(matches!(
            mean_sample_rate(&s),
            Err(AnalysisError::InsufficientSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn longest_increment_finds_injected_gap() {
        let mut tow: Vec<u64> = (0..100u64).map(|i| i * 16_667).collect();
        for t in tow.iter_mut().skip(50) {
            *t += 2_500_000; // one 2.5 s gap
        }
        let sys = tow.clone();
        let s = series(tow, sys);
        let longest = longest_increment(&s).unwrap();
        assert!((longest - 2.516667).abs() < 1e-6);
    }

    #[test]
    fn uniform_series_longest_increment_is_the_period() {
        let s = constant_latency_series(200, 16_667, 3_000);
        assert!((longest_increment(&s).unwrap() - 0.016667).abs() < 1e-9);
    }

    #[test]
    fn constant_latency_yields_exactly_zero_jitter() {
        let s = constant_latency_series(1000, 10_000, 123_456);
        assert_eq!(double_difference_jitter(&s).unwrap(), 0.0);
    }

    #[test]
    fn alternating_latency_jitter_is_twice_the_swing() {
        // uniform 10 ms sampling, latency alternating 0 / 5 ms
        let n = 2000usize;
        let tow: Vec<u64> = (0..n as u64).map(|i| i * 10_000).collect();
        let sys: Vec<u64> = tow
            .iter()
            .enumerate()
            .map(|(i, t)| t + 20_000 + if i % 2 == 0 { 0 } else { 5_000 })
            .collect();
        let s = series(tow, sys);
        let jitter = double_difference_jitter(&s).unwrap();
        assert!((jitter - 0.010).abs() < 1e-4, "jitter {jitter}");
    }

    #[test]
    fn jitter_undefined_below_three_samples() {
        let s = series(vec![0, 10], vec![0, 10]);
        assert!(matches!(
            double_difference_jitter(&s),
            Err(AnalysisError::InsufficientSamples { needed: 3, got: 2 })
        ));
    }

    // Independent oracle: algebraically equivalent latency-difference
    // route, f64 arithmetic, explicit floor/ceil interpolation.
    fn oracle_jitter(series: &TimingSeries) -> f64 {
        let lat: Vec<f64> = series
            .tow_us()
            .iter()
            .zip(series.sys_us())
            .map(|(&t, &s)| (s as i128 - t as i128) as f64 / 1e6)
            .collect();
        let mut dd: Vec<f64> = lat.windows(2).map(|w| w[1] - w[0]).collect();
        dd.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let h = p * (dd.len() - 1) as f64;
            let lo = dd[h.floor() as usize];
            let hi = dd[h.ceil() as usize];
            lo + (hi - lo) * (h - h.floor())
        };
        q(0.95) - q(0.05)
    }

    #[test]
    fn jitter_matches_brute_force_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xDD);
        for _ in 0..20 {
            let n = 2_000;
            let mut t = 500_000u64;
            let mut tow = Vec::with_capacity(n);
            let mut sys = Vec::with_capacity(n);
            for _ in 0..n {
                t += rng.gen_range(1_000..30_000);
                tow.push(t);
                sys.push(t + 40_000 + rng.gen_range(0..25_000));
            }
            let s = series(tow, sys);
            let jitter = double_difference_jitter(&s).unwrap();
            assert!((jitter - oracle_jitter(&s)).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert!((quantile_sorted(&xs, 0.25) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn pooled_rate_is_total_increments_over_total_span() {
        // runs at 50 Hz and 100 Hz with equal 1 s spans pool to 75 Hz
        let a = constant_latency_series(51, 20_000, 0); // 50 Hz, 1 s
        let b = constant_latency_series(101, 10_000, 0); // 100 Hz, 1 s
        let pooled = pooled_phase_metrics(&[a, b]);
        assert!((pooled.mean_sample_rate_hz.unwrap() - 75.0).abs() < 1e-9);
        assert_eq!(pooled.sample_count, 152);
    }

    #[test]
    fn pooling_never_differences_across_run_boundaries() {
        // runs whose endpoints would fabricate a huge increment if joined
        let a = constant_latency_series(100, 10_000, 5_000);
        let tow_b: Vec<u64> = (0..100u64).map(|i| 500_000_000 + i * 10_000).collect();
        let sys_b: Vec<u64> = tow_b.iter().map(|t| t + 5_000).collect();
        let b = series(tow_b, sys_b);
        let pooled = pooled_phase_metrics(&[a, b]);
        assert!((pooled.longest_increment_s.unwrap() - 0.01).abs() < 1e-9);
        assert_eq!(pooled.double_difference_jitter_s.unwrap(), 0.0);
    }

    #[test]
    fn empty_and_single_sample_runs_pool_to_absent_metrics() {
        let empty = TimingSeries::new(vec![], vec![]).unwrap();
        let single = series(vec![9], vec![9]);
        let pooled = pooled_phase_metrics(&[empty, single]);
        assert_eq!(pooled.sample_count, 1);
        assert!(pooled.mean_sample_rate_hz.is_none());
        assert!(pooled.longest_increment_s.is_none());
        assert!(pooled.double_difference_jitter_s.is_none());
    }
}
