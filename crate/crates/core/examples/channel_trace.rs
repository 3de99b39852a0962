//! SNR of a few stations over time, plus how often each clears the QPSK
//! threshold.
//!
//! ```text
//! cargo run --example channel_trace -- [sigma_db] [frames]
//! ```

use tcpaware_sim::amc::ModulationTable;
use tcpaware_sim::channel::ChannelState;
use tcpaware_sim::config::{default_config, DistanceLayout};
use tcpaware_sim::seed::{stream, StreamRole};

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut config = default_config(DistanceLayout::Unequal);
    config.shadowing_sigma_db = args.first().copied().unwrap_or(8.0);
    let frames = args.get(1).map_or(2000, |&f| f as u64);
    config.validate()?;

    let table = ModulationTable::from_config(&config)?;
    let mut channel = ChannelState::new(&config, &table)?;
    let mut rngs: Vec<_> = (0..config.num_ss)
        .map(|ss| stream(config.rng_seed, 0, ss as u64, StreamRole::Channel))
        .collect();
    let threshold = table.min_threshold_db();
    let mut above = vec![0u64; config.num_ss];

    println!("frame  ss0_db  ss1_db  ss3_db");
    for frame in 0..frames {
        channel.advance_frame(&mut rngs);
        let snr = channel.snr_db();
        for (count, s) in above.iter_mut().zip(&snr) {
            *count += u64::from(*s >= threshold);
        }
        if frame % 100 == 0 {
            println!("{frame:>5} {:>7.2} {:>7.2} {:>7.2}", snr[0], snr[1], snr[3]);
        }
    }
    println!("fraction of frames above {threshold:.2} dB:");
    for (ss, count) in above.iter().enumerate() {
        println!(
            "  ss{ss} at {:.3} km: {:.3}",
            config.distances_km[ss],
            *count as f64 / frames as f64
        );
    }
    Ok(())
}
