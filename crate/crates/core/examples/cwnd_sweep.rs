//! Throughput against the TCP window cap for TWUS with and without adaptive
//! modulation.
//!
//! ```text
//! cargo run --release --example cwnd_sweep -- [runs] [frames]
//! ```

use tcpaware_sim::config::{ExperimentConfig, SchedulerKind};
use tcpaware_sim::engine::SweepParameter;
use tcpaware_sim::report::{summarize_sweep, CwndPolicy};

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let config = ExperimentConfig {
        num_runs: args.first().map_or(5, |&r| r as u32),
        num_frames: args.get(1).copied().unwrap_or(20_000),
        ..ExperimentConfig::default()
    };

    let values: Vec<f64> = (1..=10).map(|i| f64::from(i * 10)).collect();
    let rows = summarize_sweep(
        &config,
        &[SchedulerKind::TwusA, SchedulerKind::Twus],
        SweepParameter::CwndMax,
        &values,
        CwndPolicy::FromConfig,
    )?;
    println!("cwnd_max  scheduler  thr_kbps   util   avg_cwnd");
    for r in &rows {
        println!(
            "{:>8}  {:<9} {:>9.1} {:>6.3} {:>9.2}",
            r.cwnd_max,
            r.scheduler.as_str(),
            r.metrics.avg_throughput_bps.mean / 1e3,
            r.metrics.slot_utilization.mean,
            r.metrics.avg_cwnd.mean
        );
    }
    Ok(())
}
