//! One polling epoch of the window-aware schedulers on four stations with
//! fixed SNRs, showing demand, weights and slot grants frame by frame.
//!
//! ```text
//! cargo run --example scheduler_frame
//! ```

use tcpaware_sim::amc::ModulationTable;
use tcpaware_sim::config::{ExperimentConfig, SchedulerKind};
use tcpaware_sim::scheduler::{PollReport, SchedulerParams, SchedulerState};

fn main() -> tcpaware_sim::Result<()> {
    let table = ModulationTable::build(25e6, 1e-6)?;
    // 64-QAM, 16-QAM, QPSK, and one station below every threshold
    let snr_db = [26.0, 20.0, 14.0, 5.0];
    let reports = [
        PollReport {
            cwnd: 40,
            tto_s: 0.30,
            rto_s: 0.3,
            rtt_s: 0.12,
        },
        PollReport {
            cwnd: 10,
            tto_s: 0.05,
            rto_s: 0.3,
            rtt_s: 0.11,
        },
        PollReport {
            cwnd: 25,
            tto_s: 0.20,
            rto_s: 0.3,
            rtt_s: 0.13,
        },
        PollReport {
            cwnd: 30,
            tto_s: 0.25,
            rto_s: 0.3,
            rtt_s: 0.12,
        },
    ];

    for kind in [SchedulerKind::TwusA, SchedulerKind::DtwusA] {
        let config = ExperimentConfig::default().with_scheduler(kind);
        let mut sched = SchedulerState::new(SchedulerParams::from_config(&config), snr_db.len());
        sched.begin_epoch(&reports, &snr_db, &table)?;
        println!(
            "{kind}: epoch of {} frames, {} schedulable",
            sched.epoch_frames, sched.num_schedulable
        );
        for frame in 0..3 {
            let grants = sched.schedule_frame(&snr_db, &table)?;
            let line: Vec<String> = grants
                .iter()
                .map(|s| {
                    format!(
                        "{:>3} slots (w {:.2}, D {:>6.0})",
                        s.slots_granted, s.weight, s.demand_bits
                    )
                })
                .collect();
            println!("  frame {frame}: {}", line.join(" | "));
        }
    }
    Ok(())
}
