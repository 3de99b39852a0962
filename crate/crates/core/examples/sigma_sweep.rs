//! Throughput and fairness against shadowing spread, as CSV on stdout.
//!
//! ```text
//! cargo run --release --example sigma_sweep -- [runs] [frames] > sigma.csv
//! ```

use tcpaware_sim::config::{ExperimentConfig, SchedulerKind};
use tcpaware_sim::engine::SweepParameter;
use tcpaware_sim::report::{summarize_sweep, write_summary_csv, CwndPolicy};

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let config = ExperimentConfig {
        num_runs: args.first().map_or(5, |&r| r as u32),
        num_frames: args.get(1).copied().unwrap_or(10_000),
        ..ExperimentConfig::default()
    };

    let rows = summarize_sweep(
        &config,
        &[
            SchedulerKind::RrA,
            SchedulerKind::TwusA,
            SchedulerKind::DtwusA,
        ],
        SweepParameter::SigmaDb,
        &[4.0, 6.0, 8.0, 10.0, 12.0],
        CwndPolicy::PerScheduler,
    )?;
    for r in &rows {
        eprintln!(
            "sigma {:>4} {:<8} {:>8.1} kbit/s  util {:.3}  JFI {:.3}",
            r.sigma_db,
            r.scheduler.as_str(),
            r.metrics.avg_throughput_bps.mean / 1e3,
            r.metrics.slot_utilization.mean,
            r.metrics.jfi.mean
        );
    }
    write_summary_csv(&rows, std::io::stdout().lock())
}
