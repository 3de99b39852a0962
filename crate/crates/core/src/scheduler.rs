//! Polling-epoch uplink scheduling: TWUS/DTWUS weighted allocation and the
//! round-robin baseline.
//!
//! At a poll every connected station reports its window, time to timeout
//! and RTT. Stations with a usable channel form the schedulable set for the
//! next `k` frames, each starting with a demand of one window. Every frame
//! the stations of the schedulable set whose channel clears the lowest
//! threshold (and that still have demand) are active and share the uplink
//! slots.
//!
//! Weighted policies rank active stations by
//! `(D_i / R_i) * (dc_i / R_i)`, divided by the deadline `d_i` for the
//! deadline variants. `D_i` is the outstanding demand in bits, `R_i` the
//! frame's rate and `dc_i` the deficit counter shifted to be non-negative
//! over the active set. The deficit counter credits every station with the
//! quantum `Q` (mean bits served per schedulable station) and debits what it
//! was actually granted.

use crate::amc::{ModulationTable, RateMode};
use crate::config::{DeficitUpdate, ExperimentConfig, FrameTiming, SchedulerKind};
use crate::error::{Error, Result};

const SLOT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    RoundRobin,
    /// Window-aware weights; `deadline` adds the timeout urgency term.
    WindowAware {
        deadline: bool,
    },
}

impl From<SchedulerKind> for Policy {
    fn from(kind: SchedulerKind) -> Self {
        if kind.is_round_robin() {
            Policy::RoundRobin
        } else {
            Policy::WindowAware {
                deadline: kind.uses_deadline(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerParams {
    pub timing: FrameTiming,
    pub packet_len_bits: u32,
    pub policy: Policy,
    pub rate_mode: RateMode,
    pub redistribute_leftover: bool,
    pub deficit_update: DeficitUpdate,
}

impl SchedulerParams {
    pub fn from_config(c: &ExperimentConfig) -> Self {
        Self {
            timing: c.timing,
            packet_len_bits: c.packet_len_bits,
            policy: c.scheduler_kind.into(),
            rate_mode: if c.scheduler_kind.adaptive() {
                RateMode::Adaptive
            } else {
                RateMode::FixedQpsk
            },
            redistribute_leftover: c.redistribute_leftover,
            deficit_update: c.deficit_update,
        }
    }

    fn deadline_enabled(&self) -> bool {
        matches!(self.policy, Policy::WindowAware { deadline: true })
    }
}

/// What a station reports when polled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PollReport {
    pub cwnd: u32,
    /// Time left to the TCP timeout.
    pub tto_s: f64,
    /// Full timeout value, used when a deadline expires.
    pub rto_s: f64,
    pub rtt_s: f64,
}

/// Per-station bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StationSched {
    pub schedulable: bool,
    pub active: bool,
    pub flag: bool,
    pub demand_bits: f64,
    pub deficit: f64,
    pub scaled_deficit: f64,
    pub weight: f64,
    pub slots_granted: u32,
    pub deadline_s: f64,
    pub rate_bps: f64,
    pub timeout_s: f64,
    /// Bits granted in the previous frame, `Flag * R * N * T_s`.
    pub served_prev_bits: f64,
}

impl StationSched {
    fn slot_bits(&self, slot_s: f64) -> f64 {
        self.rate_bps * slot_s
    }

    /// Slots needed to clear the remaining demand at the current rate.
    fn slots_needed(&self, slot_s: f64) -> u32 {
        if self.rate_bps <= 0.0 || self.demand_bits <= 0.0 {
            return 0;
        }
        (self.demand_bits / self.slot_bits(slot_s) - SLOT_EPS)
            .ceil()
            .max(0.0) as u32
    }
}

#[derive(Debug, Clone)]
pub struct SchedulerState {
    pub params: SchedulerParams,
    pub stations: Vec<StationSched>,
    /// Polling epoch length `k` in frames.
    pub epoch_frames: u32,
    /// Frames scheduled since the last poll.
    pub frame_in_epoch: u32,
    /// `M`, size of the schedulable set.
    pub num_schedulable: usize,
    pub quantum_bits: f64,
    prev_quantum_bits: f64,
    rr_pointer: usize,
}

/// `k = ceil(min RTT / T_f)`, at least one frame.
pub fn epoch_length(reports: &[PollReport], frame_duration_s: f64) -> u32 {
    let min_rtt = reports
        .iter()
        .map(|r| r.rtt_s)
        .fold(f64::INFINITY, f64::min);
    if !min_rtt.is_finite() {
        return 1;
    }
    ((min_rtt / frame_duration_s - SLOT_EPS).ceil() as u32).max(1)
}

impl SchedulerState {
    pub fn new(params: SchedulerParams, num_ss: usize) -> Self {
        Self {
            params,
            stations: vec![StationSched::default(); num_ss],
            epoch_frames: 1,
            frame_in_epoch: 0,
            num_schedulable: 0,
            quantum_bits: 0.0,
            prev_quantum_bits: 0.0,
            rr_pointer: 0,
        }
    }

    fn slot_s(&self) -> f64 {
        self.params.timing.slot_duration_s
    }

    fn n_slots(&self) -> u32 {
        self.params.timing.uplink_slots_per_frame
    }

    pub fn epoch_finished(&self) -> bool {
        self.frame_in_epoch >= self.epoch_frames
    }

    /// Polls every connected station and opens a new epoch.
    pub fn begin_epoch(
        &mut self,
        reports: &[PollReport],
        snr_db: &[f64],
        table: &ModulationTable,
    ) -> Result<()> {
        if reports.is_empty() {
            return Err(Error::Contract("polling an empty connected set".into()));
        }
        if reports.len() != self.stations.len() || snr_db.len() != self.stations.len() {
            return Err(Error::Contract(format!(
                "{} stations but {} reports and {} SNR values",
                self.stations.len(),
                reports.len(),
                snr_db.len()
            )));
        }
        let deadline = self.params.deadline_enabled();
        let pl = f64::from(self.params.packet_len_bits);
        let mode = self.params.rate_mode;
        for ((st, rep), &snr) in self.stations.iter_mut().zip(reports).zip(snr_db) {
            let schedulable = rep.cwnd > 0 && table.select(snr, mode).is_some();
            let timeout_s = rep.rto_s;
            *st = StationSched {
                schedulable,
                timeout_s,
                ..StationSched::default()
            };
            if schedulable {
                st.demand_bits = f64::from(rep.cwnd) * pl;
                st.deficit = 1.0;
                st.scaled_deficit = 1.0;
                st.deadline_s = match (deadline, rep.tto_s > 0.0) {
                    (false, _) => 1.0,
                    (true, true) => rep.tto_s,
                    (true, false) => timeout_s,
                };
            }
        }
        self.num_schedulable = self.stations.iter().filter(|s| s.schedulable).count();
        self.quantum_bits = if self.num_schedulable > 0 {
            table.r_min_bps() * f64::from(self.n_slots()) * self.slot_s()
                / self.num_schedulable as f64
        } else {
            0.0
        };
        self.prev_quantum_bits = self.quantum_bits;
        self.epoch_frames = epoch_length(reports, self.params.timing.frame_duration_s);
        self.frame_in_epoch = 0;
        Ok(())
    }

    /// Runs one frame of slot assignment; returns the per-station grants.
    pub fn schedule_frame(
        &mut self,
        snr_db: &[f64],
        table: &ModulationTable,
    ) -> Result<&[StationSched]> {
        self.update_demand();
        self.frame_active_set(snr_db, table);
        self.update_quantum();
        self.update_deficits();
        self.update_deadlines();
        if self.params.policy == Policy::RoundRobin {
            for st in &mut self.stations {
                st.weight = 0.0;
            }
            self.assign_round_robin();
        } else {
            self.compute_weights()?;
            self.assign_slots();
            self.leftover_redistribution();
        }
        self.frame_in_epoch += 1;
        Ok(&self.stations)
    }

    /// `D_i(n) = D_i(n-1) - Flag_i * N_i * R_i * T_s`, floored at zero. Also
    /// latches the previous frame's service for the quantum and deficit updates.
    pub fn update_demand(&mut self) {
        let slot_s = self.slot_s();
        for st in &mut self.stations {
            st.served_prev_bits = if st.schedulable && st.flag {
                f64::from(st.slots_granted) * st.rate_bps * slot_s
            } else {
                0.0
            };
            if st.schedulable {
                st.demand_bits = (st.demand_bits - st.served_prev_bits).max(0.0);
            }
        }
    }

    /// Active stations: schedulable, channel above the lowest usable threshold
    /// and more than one bit of demand left.
    pub fn frame_active_set(&mut self, snr_db: &[f64], table: &ModulationTable) {
        let mode = self.params.rate_mode;
        for (st, &snr) in self.stations.iter_mut().zip(snr_db) {
            let rate = if st.schedulable && st.demand_bits > 1.0 {
                table.select_rate(snr, mode)
            } else {
                None
            };
            st.active = rate.is_some();
            st.rate_bps = rate.unwrap_or(0.0);
            st.flag = false;
            st.slots_granted = 0;
            st.weight = 0.0;
        }
    }

    /// `Q(n)`: mean bits granted per schedulable station in the previous frame.
    pub fn update_quantum(&mut self) {
        self.prev_quantum_bits = self.quantum_bits;
        self.quantum_bits = if self.num_schedulable == 0 {
            0.0
        } else {
            self.stations
                .iter()
                .map(|s| s.served_prev_bits)
                .sum::<f64>()
                / self.num_schedulable as f64
        };
    }

    /// Credits the quantum, debits the previous grant, then shifts the counters
    /// of the active set so the smallest becomes zero-based.
    pub fn update_deficits(&mut self) {
        let q = match self.params.deficit_update {
            DeficitUpdate::SameFrame => self.quantum_bits,
            DeficitUpdate::Lagged => self.prev_quantum_bits,
        };
        for st in self.stations.iter_mut().filter(|s| s.schedulable) {
            st.deficit += q - st.served_prev_bits;
        }
        let min_active = self
            .stations
            .iter()
            .filter(|s| s.active)
            .map(|s| s.deficit)
            .fold(f64::INFINITY, f64::min);
        for st in &mut self.stations {
            st.scaled_deficit = if st.active {
                st.deficit + min_active.abs()
            } else {
                0.0
            };
        }
    }

    /// Deadlines of schedulable stations left out of this frame shrink by a
    /// frame; one that runs out is reset to the full timeout.
    pub fn update_deadlines(&mut self) {
        if !self.params.deadline_enabled() {
            for st in self.stations.iter_mut().filter(|s| s.schedulable) {
                st.deadline_s = 1.0;
            }
            return;
        }
        let tf = self.params.timing.frame_duration_s;
        for st in self
            .stations
            .iter_mut()
            .filter(|s| s.schedulable && !s.active)
        {
            st.deadline_s -= tf;
            if st.deadline_s <= 0.0 {
                st.deadline_s = st.timeout_s;
            }
        }
    }

    /// Normalised weights over the active set. When every product is zero
    /// (a lone active station with a negative counter, say) the weights fall
    /// back to demand in slot-time, `D_i / R_i`.
    pub fn compute_weights(&mut self) -> Result<()> {
        let deadline = self.params.deadline_enabled();
        let mut total = 0.0;
        for (i, st) in self.stations.iter_mut().enumerate() {
            if !st.active {
                st.weight = 0.0;
                continue;
            }
            if !(st.rate_bps > 0.0) {
                return Err(Error::Contract(format!("active station {i} has zero rate")));
            }
            let mut w = (st.demand_bits / st.rate_bps) * (st.scaled_deficit / st.rate_bps);
            if deadline {
                w /= st.deadline_s;
            }
            st.weight = w;
            total += w;
        }
        if !(total > 0.0) || !total.is_finite() {
            total = 0.0;
            for st in self.stations.iter_mut().filter(|s| s.active) {
                st.weight = st.demand_bits / st.rate_bps;
                total += st.weight;
            }
        }
        if total > 0.0 {
            for st in self.stations.iter_mut().filter(|s| s.active) {
                st.weight /= total;
            }
        }
        Ok(())
    }

    /// `N_i = floor(min(W_i * T_ul / sum W, D_i / R_i) / T_s)`.
    pub fn assign_slots(&mut self) {
        let slot_s = self.slot_s();
        let t_ul = self.params.timing.uplink_duration_s();
        let total_w: f64 = self
            .stations
            .iter()
            .filter(|s| s.active)
            .map(|s| s.weight)
            .sum();
        for st in &mut self.stations {
            st.slots_granted = 0;
            if !st.active || total_w <= 0.0 {
                continue;
            }
            let share_s = st.weight * t_ul / total_w;
            let need_s = st.demand_bits / st.rate_bps;
            st.slots_granted = (share_s.min(need_s) / slot_s + SLOT_EPS).floor() as u32;
        }
        self.enforce_budget();
        self.refresh_flags();
    }

    /// Offers idle slots, in descending weight order, to active stations whose
    /// demand is not yet covered. No-op when redistribution is disabled.
    pub fn leftover_redistribution(&mut self) {
        if !self.params.redistribute_leftover {
            return;
        }
        let slot_s = self.slot_s();
        let mut remaining = self.n_slots().saturating_sub(self.granted_total());
        if remaining == 0 {
            return;
        }
        let mut order: Vec<usize> = (0..self.stations.len())
            .filter(|&i| self.stations[i].active)
            .collect();
        order.sort_by(|&a, &b| {
            self.stations[b]
                .weight
                .total_cmp(&self.stations[a].weight)
                .then(a.cmp(&b))
        });
        for i in order {
            let st = &mut self.stations[i];
            let extra = st
                .slots_needed(slot_s)
                .saturating_sub(st.slots_granted)
                .min(remaining);
            st.slots_granted += extra;
            remaining -= extra;
            if remaining == 0 {
                break;
            }
        }
        self.refresh_flags();
    }

    /// One pass over the active set starting at the persistent pointer; each
    /// station takes what it needs up to the slots left in the frame.
    fn assign_round_robin(&mut self) {
        let n = self.stations.len();
        let slot_s = self.slot_s();
        let mut remaining = self.n_slots();
        let mut last = None;
        for step in 0..n {
            if remaining == 0 {
                break;
            }
            let i = (self.rr_pointer + step) % n;
            let st = &mut self.stations[i];
            st.slots_granted = 0;
            if !st.active {
                continue;
            }
            let grant = st.slots_needed(slot_s).min(remaining);
            st.slots_granted = grant;
            remaining -= grant;
            if grant > 0 {
                last = Some(i);
            }
        }
        if let Some(i) = last {
            self.rr_pointer = (i + 1) % n;
        }
        self.refresh_flags();
    }

    fn enforce_budget(&mut self) {
        // floor() on shares summing to T_ul keeps this within budget; guard anyway
        let budget = self.n_slots();
        let mut over = self.granted_total().saturating_sub(budget);
        for st in self.stations.iter_mut().rev() {
            if over == 0 {
                break;
            }
            let cut = st.slots_granted.min(over);
            st.slots_granted -= cut;
            over -= cut;
        }
    }

    fn refresh_flags(&mut self) {
        for st in &mut self.stations {
            if !st.active {
                st.slots_granted = 0;
            }
            st.flag = st.slots_granted >= 1;
        }
    }

    pub fn granted_total(&self) -> u32 {
        self.stations.iter().map(|s| s.slots_granted).sum()
    }

    pub fn deficit_sum(&self) -> f64 {
        self.stations
            .iter()
            .filter(|s| s.schedulable)
            .map(|s| s.deficit)
            .sum()
    }
}
