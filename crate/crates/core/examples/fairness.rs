//! Fairness with stations at unequal distances: Jain's index over slots and
//! goodput, and per-station goodput relative to round robin.
//!
//! ```text
//! cargo run --release --example fairness -- [sigma_db] [runs] [frames]
//! ```

use tcpaware_sim::config::{default_config, DistanceLayout, SchedulerKind};
use tcpaware_sim::report::{summarize, CwndPolicy};

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut config = default_config(DistanceLayout::Unequal);
    config.shadowing_sigma_db = args.first().copied().unwrap_or(8.0);
    config.num_runs = args.get(1).map_or(5, |&r| r as u32);
    config.num_frames = args.get(2).map_or(10_000, |&f| f as u64);

    let kinds = [
        SchedulerKind::RrA,
        SchedulerKind::TwusA,
        SchedulerKind::DtwusA,
    ];
    let rows = summarize(&config, &kinds, CwndPolicy::PerScheduler)?;
    println!("sched     JFI_slots  JFI_goodput  WCTFI   TFI");
    for r in &rows {
        println!(
            "{:<8} {:>10.4} {:>12.4} {:>6.3} {:>6.3}",
            r.scheduler.as_str(),
            r.metrics.jfi.mean,
            r.metrics.jfi_throughput.mean,
            r.wctfi.mean,
            r.tfi.mean
        );
    }
    println!("per-station goodput (kbit/s):");
    for (ss, d) in config.distances_km.iter().enumerate() {
        let cells: Vec<String> = rows
            .iter()
            .map(|r| format!("{:>8.1}", r.metrics.per_ss_throughput_bps[ss].mean / 1e3))
            .collect();
        println!("  ss{ss} {d:.3} km {}", cells.join(" "));
    }
    Ok(())
}
