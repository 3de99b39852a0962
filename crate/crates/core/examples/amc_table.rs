//! Modulation thresholds and the rate picked at a few SNRs.
//!
//! ```text
//! cargo run --example amc_table -- [ber]
//! ```

use tcpaware_sim::amc::{ModulationTable, RateMode};

fn main() -> tcpaware_sim::Result<()> {
    let ber: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1e-6);
    let table = ModulationTable::build(25e6, ber)?;
    println!("target BER {ber:e}");
    for row in table.rows() {
        println!(
            "  {:<7} {:>5.0} Mbit/s  {:.2} b/s/Hz  threshold {:.2} dB",
            row.scheme.to_string(),
            row.rate_bps / 1e6,
            row.spectral_eff,
            row.snr_th_db
        );
    }
    for snr in [5.0, 12.5, 20.0, 30.0] {
        let pick = |mode| {
            table
                .select_rate(snr, mode)
                .map_or("-".to_string(), |r| format!("{:.0}", r / 1e6))
        };
        println!(
            "SNR {snr:>5.1} dB -> adaptive {} Mbit/s, QPSK-only {} Mbit/s",
            pick(RateMode::Adaptive),
            pick(RateMode::FixedQpsk)
        );
    }
    Ok(())
}
