//! Simulated TCP throughput against the polling-adjusted send-rate model over
//! a window sweep.
//!
//! ```text
//! cargo run --release --example analysis_validation -- [runs] [frames]
//! ```

use tcpaware_sim::analysis::compare_with_simulation;
use tcpaware_sim::config::ExperimentConfig;

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let config = ExperimentConfig {
        num_runs: args.first().map_or(10, |&r| r as u32),
        num_frames: args.get(1).copied().unwrap_or(10_000),
        ..ExperimentConfig::default()
    };

    let rows = compare_with_simulation(&config, &[10, 20, 30, 40, 50, 60, 70, 80, 90, 100])?;
    println!(
        "{:>8} {:>10} {:>10} {:>8} {:>6} {:>8} {:>8} {:>6}",
        "cwnd_max", "sim_kbps", "model_kbps", "rel_err", "p", "p_w", "rtt_ms", "k"
    );
    for r in rows {
        println!(
            "{:>8} {:>10.1} {:>10.1} {:>8.3} {:>6.3} {:>8.5} {:>8.1} {:>6.1}",
            r.cwnd_max,
            r.sim_bps / 1e3,
            r.model_bps / 1e3,
            r.rel_err,
            r.params.p,
            r.params.p_w,
            r.params.rtt_w_s * 1e3,
            r.params.k
        );
    }
    Ok(())
}
