//! Packet-granular TCP Reno sender state driven by the frame clock.
//!
//! The window is counted in whole packets. Slow start adds one packet per
//! ACK; congestion avoidance adds one packet once a full window of ACKs has
//! arrived. Every third corrupted packet is a triple-duplicate loss
//! indication and halves the window; a retransmission timeout collapses it to
//! one packet and doubles the timer.

use rand::Rng;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Weight of the old estimate in the smoothed RTT.
pub const RTT_SMOOTHING: f64 = 0.875;
const DUP_ACK_THRESHOLD: u32 = 3;
const MAX_BACKOFF: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TcpFlowState {
    pub cwnd: u32,
    pub cwnd_max: u32,
    pub ssthresh: u32,
    pub rtt_estimate_s: f64,
    /// Current retransmission timeout `TO`.
    pub rto_s: f64,
    /// Time left before the timeout fires, `TTO`.
    pub tto_s: f64,
    pub dup_ack_count: u32,
    /// Packets handed to the MAC and not yet acknowledged. Right after a window
    /// reduction this may exceed `cwnd`; no new packet is released until it drops.
    pub inflight: u32,
    pub acks_per_packet: u32,
    pub start_offset_s: f64,
    pub packets_acked_total: u64,
    pub loss_indications: u64,
    pub timeouts: u64,
    pub triple_dups: u64,
    rto_min_s: f64,
    initial_rto_s: f64,
    in_backoff: bool,
    /// Clean packets not yet folded into a whole ACK (delayed ACKs when b > 1).
    ack_credit: u32,
    /// ACKs counted toward the next congestion-avoidance increment.
    ca_acks: u32,
}

/// Result of handing a batch of delivered packets to the sender.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeliveryOutcome {
    pub clean: u32,
    /// Corrupted packets; they stay in flight and must be retransmitted.
    pub errored: u32,
    pub triple_dups: u32,
}

impl TcpFlowState {
    /// Fresh flow: window 1, `ssthresh = cwnd_max/2`, RTT at its base value and a
    /// start offset drawn uniformly from `[0, base_rtt]`.
    pub fn new<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Self {
        Self::with_params(
            config.cwnd_max,
            config.base_rtt_s,
            config.rto_min_s,
            config.acks_per_packet,
            rng.random_range(0.0..=config.base_rtt_s),
        )
    }

    pub fn with_params(
        cwnd_max: u32,
        base_rtt_s: f64,
        rto_min_s: f64,
        acks_per_packet: u32,
        start_offset_s: f64,
    ) -> Self {
        let rto = (2.0 * base_rtt_s).max(rto_min_s);
        Self {
            cwnd: 1,
            cwnd_max: cwnd_max.max(1),
            ssthresh: (cwnd_max / 2).max(2),
            rtt_estimate_s: base_rtt_s,
            rto_s: rto,
            tto_s: rto,
            dup_ack_count: 0,
            inflight: 0,
            acks_per_packet: acks_per_packet.max(1),
            start_offset_s,
            packets_acked_total: 0,
            loss_indications: 0,
            timeouts: 0,
            triple_dups: 0,
            rto_min_s,
            initial_rto_s: rto,
            in_backoff: false,
            ack_credit: 0,
            ca_acks: 0,
        }
    }

    /// Bits the flow asks for at a poll: one window of packets.
    pub fn demand_bits(&self, packet_len_bits: u32) -> f64 {
        f64::from(self.cwnd) * f64::from(packet_len_bits)
    }

    /// Packets that may be released into the MAC queue right now.
    pub fn sendable(&self) -> u32 {
        self.cwnd.saturating_sub(self.inflight)
    }

    /// Records `n` packets entering the MAC queue.
    pub fn on_release(&mut self, n: u32) {
        self.inflight += n;
    }

    /// Processes the ACK feedback of `n_packets` delivered packets, each
    /// corrupted independently with `per_packet_error_prob`.
    ///
    /// `measured_rtt_s` is `None` for retransmissions (Karn's rule).
    pub fn on_packets_delivered<R: Rng + ?Sized>(
        &mut self,
        n_packets: u32,
        measured_rtt_s: Option<f64>,
        rng: &mut R,
        per_packet_error_prob: f64,
    ) -> Result<DeliveryOutcome> {
        if n_packets > self.inflight {
            return Err(Error::Contract(format!(
                "{n_packets} packets delivered but only {} in flight",
                self.inflight
            )));
        }
        let mut out = DeliveryOutcome::default();
        for _ in 0..n_packets {
            let errored =
                per_packet_error_prob > 0.0 && rng.random::<f64>() < per_packet_error_prob;
            if errored {
                out.errored += 1;
                self.dup_ack_count += 1;
                if self.dup_ack_count >= DUP_ACK_THRESHOLD {
                    self.on_triple_dup();
                    out.triple_dups += 1;
                }
            } else {
                out.clean += 1;
                self.inflight -= 1;
                self.packets_acked_total += 1;
                self.ack_credit += 1;
                if self.ack_credit >= self.acks_per_packet {
                    self.ack_credit = 0;
                    self.grow_on_ack();
                }
            }
        }
        if out.clean > 0 {
            if let Some(sample) = measured_rtt_s {
                self.in_backoff = false;
                self.update_rtt(sample)?;
            }
            self.tto_s = self.rto_s;
        }
        Ok(out)
    }

    fn grow_on_ack(&mut self) {
        if self.cwnd < self.ssthresh {
            self.cwnd += 1;
        } else {
            self.ca_acks += 1;
            if self.ca_acks >= self.cwnd {
                self.ca_acks = 0;
                self.cwnd += 1;
            }
        }
        self.cwnd = self.cwnd.min(self.cwnd_max);
    }

    fn on_triple_dup(&mut self) {
        let half = self.cwnd / 2;
        self.ssthresh = half.max(2);
        self.cwnd = half.max(1);
        self.dup_ack_count = 0;
        self.ca_acks = 0;
        self.loss_indications += 1;
        self.triple_dups += 1;
    }

    /// Retransmission timeout: window back to one packet, timer doubled.
    /// Packets in flight are kept for retransmission.
    pub fn on_timeout(&mut self) {
        self.ssthresh = (self.cwnd / 2).max(2);
        self.cwnd = 1;
        self.rto_s = (2.0 * self.rto_s).min(MAX_BACKOFF * self.initial_rto_s);
        self.tto_s = self.rto_s;
        self.dup_ack_count = 0;
        self.ca_acks = 0;
        self.in_backoff = true;
        self.loss_indications += 1;
        self.timeouts += 1;
    }

    /// Exponentially averaged RTT; the timeout follows `max(rto_min, 2 * RTT)`
    /// except while backing off.
    pub fn update_rtt(&mut self, sample_s: f64) -> Result<()> {
        if !(sample_s > 0.0 && sample_s.is_finite()) {
            return Err(Error::Contract(format!(
                "RTT sample {sample_s} must be > 0"
            )));
        }
        self.rtt_estimate_s =
            RTT_SMOOTHING * self.rtt_estimate_s + (1.0 - RTT_SMOOTHING) * sample_s;
        if !self.in_backoff {
            self.rto_s = (2.0 * self.rtt_estimate_s).max(self.rto_min_s);
            self.tto_s = self.tto_s.min(self.rto_s);
        }
        Ok(())
    }

    /// Runs the timeout clock for `dt` while data is outstanding. Returns true
    /// once the timer has expired; the caller then invokes [`on_timeout`](Self::on_timeout).
    pub fn tick(&mut self, dt: f64) -> bool {
        if self.inflight == 0 {
            return false;
        }
        self.tto_s = (self.tto_s - dt).max(0.0);
        self.tto_s <= 0.0
    }

    pub fn in_backoff(&self) -> bool {
        self.in_backoff
    }
}
