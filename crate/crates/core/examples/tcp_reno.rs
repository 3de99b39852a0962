//! One Reno sender driven by hand: a window's worth of packets per round
//! trip, each corrupted with a fixed probability.
//!
//! ```text
//! cargo run --example tcp_reno -- [error_prob] [rounds]
//! ```

use tcpaware_sim::seed::{stream, StreamRole};
use tcpaware_sim::tcp::TcpFlowState;

fn main() -> tcpaware_sim::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let error_prob = args.first().copied().unwrap_or(0.01);
    let rounds = args.get(1).map_or(60, |&r| r as u32);
    let rtt = 0.1;

    let mut rng = stream(1, 0, 0, StreamRole::Tcp);
    let mut flow = TcpFlowState::with_params(70, rtt, 0.2, 1, 0.0);
    println!("round  cwnd  ssthresh  inflight  rto_s");
    for round in 0..rounds {
        let n = flow.sendable();
        flow.on_release(n);
        // the whole flight comes back after one round trip
        let burst = flow.inflight;
        let out = flow.on_packets_delivered(burst, Some(rtt), &mut rng, error_prob)?;
        if out.clean == 0 && flow.tick(flow.rto_s) {
            flow.on_timeout();
        }
        println!(
            "{round:>5} {:>5} {:>9} {:>9} {:>6.3}{}",
            flow.cwnd,
            flow.ssthresh,
            flow.inflight,
            flow.rto_s,
            if out.triple_dups > 0 {
                "  triple dup"
            } else {
                ""
            }
        );
    }
    println!(
        "acked {} packets, {} triple dups, {} timeouts",
        flow.packets_acked_total, flow.triple_dups, flow.timeouts
    );
    Ok(())
}
