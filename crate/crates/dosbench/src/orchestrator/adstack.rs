//! The AD-stack experiment: the control workload benchmarked back to back
//! without and with flood load on the same host, paired per repetition.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::control_workload::{
    run_benchmark_in_memory, write_latency_csv, BenchmarkConfig, BenchmarkRun,
};
use crate::device_sim::derive_seed;
use crate::packet_forge::{flood, raw_icmp_available, FloodConfig, StopHandle, TransportMode};
use crate::timing_analysis::{latency_summary, LatencySummary};

use super::config::{run_dir, ExperimentConfig, Scenario};
use super::report::{AdstackPair, AggregateReport, Provenance};
use super::OrchestratorError;

/// Run the paired benchmark: for each repetition, a reference run on the
/// idle host and a run with the flood saturating it, using the same seed
/// so both runs execute the identical control trajectory. Artifacts land
/// under `out_dir` (`run-<k>/{reference,attack}.csv`, `report.json`,
/// `plots/*.csv`).
pub fn run_adstack_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<AggregateReport, OrchestratorError> {
    config.validate()?;
    if config.scenario != Scenario::AdStack {
        return Err(OrchestratorError::Config(
            "run_adstack_experiment needs an ad-stack scenario config".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut provenance = Provenance::begin(config);

    // degrade gracefully when raw sockets are unavailable
    let mut flood_template = config.flood.clone();
    if flood_template.transport_mode == TransportMode::RawIcmp && !raw_icmp_available() {
        flood_template.transport_mode = TransportMode::UdpFallback;
        provenance.warnings.push(
            "raw ICMP sockets unavailable; flood fell back to the udp transport".to_string(),
        );
    }

    let mut pairs = Vec::new();
    for k in 0..config.repetitions {
        let dir = run_dir(out_dir, k);
        std::fs::create_dir_all(&dir)?;

        let bench = BenchmarkConfig {
            iterations: config.workload.iterations,
            dt_s: config.workload.dt_s,
            seed: derive_seed(config.seed, 2_000 + u64::from(k)),
            mpc: config.workload.mpc,
        };
        if config.workload.warmup_iterations > 0 {
            run_benchmark_in_memory(&BenchmarkConfig {
                iterations: config.workload.warmup_iterations,
                ..bench
            })?;
        }

        let reference_run = run_benchmark_in_memory(&bench)?;
        save_records(&reference_run, &dir.join("reference.csv"))?;

        let (attack_run, stats) = benchmark_under_flood(&bench, &flood_template)?;
        save_records(&attack_run, &dir.join("attack.csv"))?;
        provenance.achieved_flood_rates_pps.push(stats.achieved_rate_pps);

        pairs.push(AdstackPair {
            run_index: k,
            reference: latency_summary(&reference_run.records)?,
            under_attack: latency_summary(&attack_run.records)?,
            flood: stats,
        });
    }

    provenance.finish();
    let report = AggregateReport {
        scenario: Scenario::AdStack,
        provenance,
        gnss_runs: Vec::new(),
        pooled_reference: None,
        pooled_attack: None,
        adstack_pairs: pairs,
    };
    report.save(&out_dir.join("report.json"))?;
    write_plot_data(&out_dir.join("plots"), &report)?;
    Ok(report)
}

/// Run the benchmark while flood workers hammer the configured target;
/// the flood is stopped as soon as the benchmark finishes.
fn benchmark_under_flood(
    bench: &BenchmarkConfig,
    flood_template: &FloodConfig,
) -> Result<(BenchmarkRun, crate::packet_forge::FloodStats), OrchestratorError> {
    let stop = StopHandle::new();
    let flood_config = FloodConfig {
        duration_s: 3_600.0, // bounded by the stop signal, not the clock
        ..flood_template.clone()
    };
    let worker = {
        let stop = stop.clone();
        std::thread::spawn(move || flood(&flood_config, &stop))
    };
    // let the senders reach steady rate before measuring
    std::thread::sleep(std::time::Duration::from_millis(100));

    let run = run_benchmark_in_memory(bench);
    stop.stop();
    let stats = worker.join().expect("flood thread panicked")?;
    Ok((run?, stats))
}

fn save_records(run: &BenchmarkRun, path: &Path) -> Result<(), OrchestratorError> {
    let mut sink = BufWriter::new(File::create(path)?);
    write_latency_csv(&run.records, &mut sink)?;
    Ok(())
}

fn write_plot_data(plots_dir: &Path, report: &AggregateReport) -> Result<(), OrchestratorError> {
    std::fs::create_dir_all(plots_dir)?;

    let mut pairs = File::create(plots_dir.join("latency_pairs.csv"))?;
    writeln!(
        pairs,
        "run,median_ref_s,median_attack_s,p99_ref_s,p99_attack_s,max_ref_s,max_attack_s,flood_rate_pps"
    )?;
    for p in &report.adstack_pairs {
        writeln!(
            pairs,
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.1}",
            p.run_index,
            p.reference.median_s,
            p.under_attack.median_s,
            p.reference.p99_s,
            p.under_attack.p99_s,
            p.reference.max_s,
            p.under_attack.max_s,
            p.flood.achieved_rate_pps
        )?;
    }

    for (name, pick) in [
        ("latency_hist_reference.csv", true),
        ("latency_hist_attack.csv", false),
    ] {
        let mut hist = File::create(plots_dir.join(name))?;
        writeln!(hist, "run,bin_lo_s,bin_hi_s,count")?;
        for p in &report.adstack_pairs {
            let summary: &LatencySummary = if pick { &p.reference } else { &p.under_attack };
            let h = &summary.histogram;
            for (i, count) in h.counts.iter().enumerate() {
                writeln!(
                    hist,
                    "{},{:.9},{:.9},{count}",
                    p.run_index,
                    h.edges_s[i],
                    h.edges_s[i + 1]
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke_config(iterations: usize, repetitions: u32) -> ExperimentConfig {
        let mut config = ExperimentConfig::adstack_default();
        config.repetitions = repetitions;
        config.workload.iterations = iterations;
        config.workload.warmup_iterations = 10;
        config.flood.target_rate_pps = 20_000;
        config
    }

    #[test]
    fn smoke_run_produces_paired_summaries() {
        let config = smoke_config(100, 1);
        let dir = tempfile::tempdir().unwrap();
        let report = run_adstack_experiment(&config, dir.path()).unwrap();
        assert_eq!(report.adstack_pairs.len(), 1);
        let pair = &report.adstack_pairs[0];
        assert_eq!(pair.reference.count, 100);
        assert_eq!(pair.under_attack.count, 100);
        assert!(pair.flood.packets_sent > 0);
        assert!(dir.path().join("run-0/reference.csv").exists());
        assert!(dir.path().join("run-0/attack.csv").exists());
        assert!(dir.path().join("plots/latency_pairs.csv").exists());
    }

    #[test]
    fn repeated_reference_runs_stay_comparable() {
        let config = smoke_config(300, 1);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_adstack_experiment(&config, dir_a.path()).unwrap();
        let b = run_adstack_experiment(&config, dir_b.path()).unwrap();
        let ma = a.adstack_pairs[0].reference.median_s;
        let mb = b.adstack_pairs[0].reference.median_s;
        let ratio = ma.max(mb) / ma.min(mb).max(1e-9);
        assert!(ratio < 2.0, "medians {ma} vs {mb}");
    }

    #[test]
    fn icmp_request_falls_back_without_privileges() {
        let mut config = smoke_config(50, 1);
        config.flood.transport_mode = TransportMode::RawIcmp;
        config.flood.target_address = "127.0.0.1:0".parse().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run_adstack_experiment(&config, dir.path()).unwrap();
        if raw_icmp_available() {
            assert!(report.provenance.warnings.is_empty());
        } else {
            assert!(report
                .provenance
                .warnings
                .iter()
                .any(|w| w.contains("fell back")));
        }
        assert_eq!(report.adstack_pairs.len(), 1);
    }

    #[test]
    fn wrong_scenario_is_rejected() {
        let config = ExperimentConfig::gnss_default();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_adstack_experiment(&config, dir.path()),
            Err(OrchestratorError::Config(_))
        ));
    }
}
