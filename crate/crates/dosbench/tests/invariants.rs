//! Property-based invariants over the wire formats and timing metrics.

use proptest::prelude::*;

use dosbench::device_sim::{FixStatus, SolutionSample, GPS_WEEK_US};
use dosbench::packet_forge::{build_echo_request, compute_checksum, verify_checksum};
use dosbench::stream_codec::{decode_all, encode};
use dosbench::timing_analysis::{
    double_difference_jitter, mean_sample_rate, quantile_sorted, TimingSeries,
};

fn arb_sample() -> impl Strategy<Value = SolutionSample> {
    (
        0..GPS_WEEK_US,
        any::<u64>(),
        any::<i32>(),
        any::<i32>(),
        any::<i32>(),
        0u8..=2,
    )
        .prop_map(|(tow_us, sys_time_us, east_mm, north_mm, up_mm, fix)| SolutionSample {
            tow_us,
            sys_time_us,
            east_mm,
            north_mm,
            up_mm,
            fix_status: FixStatus::from_u8(fix).unwrap(),
        })
}

// strictly increasing tow with bounded increments, sys = tow + offset + noise
fn arb_series(max_len: usize) -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
    (
        3..max_len,
        1_000u64..100_000,
        0u64..3_600_000_000,
        any::<u64>(),
    )
        .prop_map(|(n, step_cap, offset, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut t = 1_000_000u64;
            let mut tow = Vec::with_capacity(n);
            let mut sys = Vec::with_capacity(n);
            for _ in 0..n {
                t += rng.gen_range(1..=step_cap);
                tow.push(t);
                sys.push(t + offset + rng.gen_range(0..200_000));
            }
            (tow, sys)
        })
}

proptest! {
    #[test]
    fn echo_request_checksum_involution(
        id in any::<u16>(),
        seq in any::<u16>(),
        payload in proptest::collection::vec(any::<u8>(), 0..64),
    ) {
        let packet = build_echo_request(id, seq, &payload).unwrap();
        let bytes = packet.serialize();
        // summing the full message (checksum included) folds to all-ones
        prop_assert!(verify_checksum(&bytes));
        // recomputing over the zeroed-checksum image reproduces the field
        let mut zeroed = bytes.clone();
        zeroed[2] = 0;
        zeroed[3] = 0;
        prop_assert_eq!(compute_checksum(&zeroed), packet.checksum);
    }

    #[test]
    fn codec_round_trip_identity(sample in arb_sample()) {
        let (decoded, diagnostics) = decode_all(&encode(&sample));
        prop_assert_eq!(decoded, vec![sample]);
        prop_assert_eq!(diagnostics.packets_ok, 1);
        prop_assert_eq!(diagnostics.bytes_skipped, 0);
    }

    #[test]
    fn jitter_is_invariant_to_clock_offsets(
        (tow, sys) in arb_series(400),
        tow_shift in 0u64..1_000_000_000,
        sys_shift in 0u64..1_000_000_000,
    ) {
        let base = double_difference_jitter(
            &TimingSeries::new(tow.clone(), sys.clone()).unwrap(),
        ).unwrap();
        let tow_shifted: Vec<u64> = tow.iter().map(|t| t + tow_shift).collect();
        let sys_shifted: Vec<u64> = sys.iter().map(|s| s + sys_shift).collect();
        let shifted = double_difference_jitter(
            &TimingSeries::new(tow_shifted, sys_shifted).unwrap(),
        ).unwrap();
        prop_assert_eq!(base, shifted);
    }

    #[test]
    fn dropping_from_constant_latency_keeps_jitter_zero(
        (tow, _) in arb_series(400),
        latency in 0u64..1_000_000,
        keep_mask in proptest::collection::vec(any::<bool>(), 400),
    ) {
        let kept: Vec<u64> = tow
            .iter()
            .zip(&keep_mask)
            .filter(|(_, keep)| **keep)
            .map(|(t, _)| *t)
            .collect();
        prop_assume!(kept.len() >= 3);
        let sys: Vec<u64> = kept.iter().map(|t| t + latency).collect();
        let jitter = double_difference_jitter(&TimingSeries::new(kept, sys).unwrap()).unwrap();
        prop_assert_eq!(jitter, 0.0);
    }

    #[test]
    fn quantile_bounds_are_ordered(mut values in proptest::collection::vec(-1e6f64..1e6, 1..300)) {
        values.sort_by(f64::total_cmp);
        let q05 = quantile_sorted(&values, 0.05);
        let q95 = quantile_sorted(&values, 0.95);
        prop_assert!(q05 <= q95);
        prop_assert!(q05 >= values[0] && q95 <= values[values.len() - 1]);
    }

    #[test]
    fn jitter_is_never_negative((tow, sys) in arb_series(300)) {
        let jitter = double_difference_jitter(&TimingSeries::new(tow, sys).unwrap()).unwrap();
        prop_assert!(jitter >= 0.0);
    }
}

// Bernoulli drops thin a uniform series to (1 - p) of its nominal rate.
#[test]
fn drop_rate_consistency() {
    use rand::{Rng, SeedableRng};
    let nominal_hz = 60.0;
    let step_us = (1e6 / nominal_hz) as u64;
    for (seed, p) in [(1u64, 0.1f64), (2, 0.3), (3, 0.5), (4, 0.7)] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 20_000usize;
        let tow: Vec<u64> = (0..n as u64)
            .map(|i| 1_000_000 + i * step_us)
            .filter(|_| rng.gen::<f64>() >= p)
            .collect();
        assert!(tow.len() >= 1_000);
        let sys = tow.clone();
        let rate = mean_sample_rate(&TimingSeries::new(tow, sys).unwrap()).unwrap();
        let expected = (1.0 - p) * nominal_hz;
        let deviation = (rate - expected).abs() / expected;
        assert!(
            deviation < 0.05,
            "p = {p}: rate {rate:.2} Hz vs expected {expected:.2} Hz"
        );
    }
}
