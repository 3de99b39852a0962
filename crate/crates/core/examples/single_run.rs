//! One simulation run with the default configuration.
//!
//! ```text
//! cargo run --release --example single_run -- [scheduler] [frames]
//! ```

use tcpaware_sim::config::{ExperimentConfig, SchedulerKind};
use tcpaware_sim::engine::run_single;

fn main() -> tcpaware_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: SchedulerKind = args
        .next()
        .map(|s| s.parse().map_err(tcpaware_sim::Error::Domain))
        .transpose()?
        .unwrap_or(SchedulerKind::TwusA);
    let mut config = ExperimentConfig::default().with_scheduler(kind);
    config.num_frames = args.next().and_then(|f| f.parse().ok()).unwrap_or(10_000);
    config.validate()?;

    let r = run_single(&config, 0)?;
    println!("{kind}, {} measured frames", r.frames);
    println!(
        "  goodput per flow   {:.1} kbit/s",
        r.avg_throughput_bps / 1e3
    );
    println!("  mean window        {:.2} packets", r.avg_cwnd);
    println!("  slot utilization   {:.3}", r.slot_utilization);
    println!("  JFI (slots)        {:.4}", r.jfi);
    println!("  loss rate          {:.5}", r.loss_rate);
    println!("  schedulable frac.  {:.3}", r.p_schedulable);
    println!(
        "  mean RTT / RTO     {:.1} / {:.1} ms",
        r.mean_rtt_s * 1e3,
        r.mean_rto_s * 1e3
    );
    println!("  timeouts, 3-dups   {}, {}", r.timeouts, r.triple_dups);
    for (ss, (thr, slots)) in r
        .per_ss_throughput_bps
        .iter()
        .zip(&r.per_ss_slots)
        .enumerate()
    {
        println!("  ss{ss}: {:>8.1} kbit/s {slots:>9} slots", thr / 1e3);
    }
    Ok(())
}
