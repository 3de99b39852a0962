//! Paired-seed comparison of the adaptive schedulers at one shadowing level.
//!
//! ```text
//! cargo run --release --example compare_schedulers -- [sigma_db] [runs] [frames]
//! ```

use tcpaware_sim::config::{ExperimentConfig, SchedulerKind};
use tcpaware_sim::engine::run_records;
use tcpaware_sim::metrics::{tfi, wctfi, AggregateMetrics};

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let base = ExperimentConfig {
        shadowing_sigma_db: args.first().copied().unwrap_or(8.0),
        num_runs: args.get(1).map_or(10, |&r| r as u32),
        num_frames: args.get(2).map_or(10_000, |&f| f as u64),
        ..ExperimentConfig::default()
    };

    let kinds = [
        SchedulerKind::RrA,
        SchedulerKind::TwusA,
        SchedulerKind::DtwusA,
    ];
    let mut all = Vec::new();
    for kind in kinds {
        all.push(run_records(&base.clone().with_scheduler(kind))?);
    }

    println!(
        "{:<8} {:>12} {:>8} {:>6} {:>6} {:>8} {:>7} {:>9} {:>8}",
        "sched", "thr_kbps", "cwnd", "util", "jfi", "p_w", "p", "rtt_ms", "timeouts"
    );
    for (kind, recs) in kinds.iter().zip(&all) {
        let a = AggregateMetrics::from_runs(recs);
        println!(
            "{:<8} {:>12.1} {:>8.2} {:>6.3} {:>6.3} {:>8.5} {:>7.3} {:>9.1} {:>8.1}",
            kind.as_str(),
            a.avg_throughput_bps.mean / 1e3,
            a.avg_cwnd.mean,
            a.slot_utilization.mean,
            a.jfi.mean,
            a.loss_rate.mean,
            a.p_schedulable.mean,
            a.mean_rtt_s.mean * 1e3,
            a.timeouts.mean,
        );
    }

    let rr = &all[0];
    for (kind, recs) in kinds.iter().zip(&all).skip(1) {
        let util_wins = recs
            .iter()
            .zip(rr)
            .filter(|(a, b)| a.slot_utilization > b.slot_utilization)
            .count();
        let (mut w, mut t) = (0.0, 0.0);
        for (a, b) in recs.iter().zip(rr) {
            w += wctfi(&a.per_ss_throughput_bps, &b.per_ss_throughput_bps)?;
            t += tfi(&a.per_ss_throughput_bps, &b.per_ss_throughput_bps)?;
        }
        let n = recs.len() as f64;
        println!(
            "{:<8} util > rr-a in {util_wins}/{} runs, mean WCTFI {:.3}, mean TFI {:.3}",
            kind.as_str(),
            recs.len(),
            w / n,
            t / n
        );
    }
    let jfi_wins = all[1]
        .iter()
        .zip(&all[2])
        .filter(|(a, b)| a.jfi >= b.jfi)
        .count();
    println!(
        "twus-a JFI >= dtwus-a JFI in {jfi_wins}/{} runs",
        all[1].len()
    );
    Ok(())
}
