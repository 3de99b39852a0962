//! Frame-clocked simulation loop: channels, polling epochs, slot grants, the
//! MAC queue of each flow and the ACK feedback that drives TCP.
//!
//! Each frame runs, in order: ACK arrivals, packet release into the MAC
//! queue, timeout clocks, channel advance, a poll when the epoch is over,
//! slot assignment, transmission and metric accumulation. A transmitted
//! packet is acknowledged `base_rtt` later; its ACK reports it clean or
//! corrupted. Corrupted packets go back to the head of the queue.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::amc::{db_to_linear, ModulationTable};
use crate::channel::ChannelState;
use crate::config::{ExperimentConfig, PacketErrorModel};
use crate::error::{Error, Result};
use crate::metrics::{jfi, slot_utilization, AggregateMetrics, MetricsRecord};
use crate::scheduler::{PollReport, SchedulerParams, SchedulerState};
use crate::seed::{stream, SimRng, StreamRole};
use crate::tcp::TcpFlowState;

/// Which per-frame traces to keep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceOptions {
    pub snr: bool,
    pub tcp: bool,
    pub allocation: bool,
}

impl TraceOptions {
    pub fn any(&self) -> bool {
        self.snr || self.tcp || self.allocation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSample {
    pub run: u32,
    pub frame: u64,
    pub ss: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcpEventKind {
    TripleDup,
    Timeout,
}

impl TcpEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TcpEventKind::TripleDup => "triple_dup",
            TcpEventKind::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcpEvent {
    pub run: u32,
    pub time_s: f64,
    pub ss: usize,
    pub event: TcpEventKind,
    pub cwnd: u32,
    pub ssthresh: u32,
    pub rto_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationSample {
    pub run: u32,
    pub frame: u64,
    pub ss: usize,
    pub rate_bps: f64,
    pub slots: u32,
    pub demand_bits: f64,
    pub dc: f64,
    pub weight: f64,
    pub deadline_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTraces {
    pub snr: Vec<SnrSample>,
    pub tcp: Vec<TcpEvent>,
    pub allocation: Vec<AllocationSample>,
}

impl RunTraces {
    pub fn extend(&mut self, other: RunTraces) {
        self.snr.extend(other.snr);
        self.tcp.extend(other.tcp);
        self.allocation.extend(other.allocation);
    }
}

#[derive(Debug, Clone, Copy)]
struct QueuedPacket {
    release_frame: u64,
    retransmit: bool,
}

#[derive(Debug, Clone, Copy)]
struct PendingAck {
    due_frame: u64,
    release_frame: u64,
    retransmit: bool,
    error_prob: f64,
}

#[derive(Debug, Clone)]
struct Flow {
    tcp: TcpFlowState,
    rng: SimRng,
    start_frame: u64,
    queue: VecDeque<QueuedPacket>,
    /// Bits of the head-of-line packet already sent.
    head_sent_bits: u64,
    acks: VecDeque<PendingAck>,
}

impl Flow {
    fn requeue(&mut self, frame: u64) {
        let pkt = QueuedPacket {
            release_frame: frame,
            retransmit: true,
        };
        let at = usize::from(self.head_sent_bits > 0).min(self.queue.len());
        self.queue.insert(at, pkt);
    }
}

/// Sums gathered over the measured frames of one run.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    frames: u64,
    cwnd_sum: f64,
    rto_sum: f64,
    acked_packets: Vec<u64>,
    granted_slots: Vec<u64>,
    used_slots: u64,
    above_threshold: u64,
    station_frames: u64,
    rtt_sum: f64,
    rtt_samples: u64,
    epoch_sum: f64,
    epochs: u64,
    loss_indications: u64,
    timeouts: u64,
    triple_dups: u64,
    packets_transmitted: u64,
}

/// Complete state of one run.
pub struct RunContext<'a> {
    config: &'a ExperimentConfig,
    run_index: u32,
    table: ModulationTable,
    channel: ChannelState,
    channel_rngs: Vec<SimRng>,
    flows: Vec<Flow>,
    scheduler: SchedulerState,
    frame: u64,
    base_rtt_frames: u64,
    acc: Accumulator,
    traces: RunTraces,
    trace_opts: TraceOptions,
}

impl<'a> RunContext<'a> {
    pub fn new(
        config: &'a ExperimentConfig,
        run_index: u32,
        trace_opts: TraceOptions,
    ) -> Result<Self> {
        config.validate()?;
        let table = ModulationTable::from_config(config)?;
        let channel = ChannelState::new(config, &table)?;
        let n = config.num_ss;
        let seed = config.rng_seed;
        let run = u64::from(run_index);
        let channel_rngs = (0..n)
            .map(|i| stream(seed, run, i as u64, StreamRole::Channel))
            .collect();
        let tf = config.timing.frame_duration_s;
        let flows = (0..n)
            .map(|i| {
                let mut rng = stream(seed, run, i as u64, StreamRole::Tcp);
                let tcp = TcpFlowState::new(config, &mut rng);
                let start_frame = (tcp.start_offset_s / tf).round() as u64;
                Flow {
                    tcp,
                    rng,
                    start_frame,
                    queue: VecDeque::new(),
                    head_sent_bits: 0,
                    acks: VecDeque::new(),
                }
            })
            .collect();
        Ok(Self {
            config,
            run_index,
            table,
            channel,
            channel_rngs,
            flows,
            scheduler: SchedulerState::new(SchedulerParams::from_config(config), n),
            frame: 0,
            base_rtt_frames: config.base_rtt_frames().max(1),
            acc: Accumulator {
                acked_packets: vec![0; n],
                granted_slots: vec![0; n],
                ..Accumulator::default()
            },
            traces: RunTraces::default(),
            trace_opts,
        })
    }

    pub fn frame_index(&self) -> u64 {
        self.frame
    }

    pub fn scheduler(&self) -> &SchedulerState {
        &self.scheduler
    }

    pub fn channel(&self) -> &ChannelState {
        &self.channel
    }

    pub fn flow(&self, ss: usize) -> &TcpFlowState {
        &self.flows[ss].tcp
    }

    fn measuring(&self) -> bool {
        self.frame >= self.config.warmup_frames
    }

    fn time_s(&self) -> f64 {
        self.frame as f64 * self.config.timing.frame_duration_s
    }

    fn tcp_event(&mut self, ss: usize, event: TcpEventKind) {
        if !self.trace_opts.tcp {
            return;
        }
        let time_s = self.time_s();
        let tcp = &self.flows[ss].tcp;
        self.traces.tcp.push(TcpEvent {
            run: self.run_index,
            time_s,
            ss,
            event,
            cwnd: tcp.cwnd,
            ssthresh: tcp.ssthresh,
            rto_s: tcp.rto_s,
        });
    }

    /// Advances the simulation by one frame.
    pub fn step(&mut self) -> Result<()> {
        let tf = self.config.timing.frame_duration_s;
        let measuring = self.measuring();

        // ACK arrivals
        for ss in 0..self.flows.len() {
            while self.flows[ss]
                .acks
                .front()
                .is_some_and(|a| a.due_frame <= self.frame)
            {
                let ack = self.flows[ss].acks.pop_front().expect("checked front");
                let rtt = (!ack.retransmit).then(|| (self.frame - ack.release_frame) as f64 * tf);
                let flow = &mut self.flows[ss];
                let out = flow
                    .tcp
                    .on_packets_delivered(1, rtt, &mut flow.rng, ack.error_prob)?;
                if out.clean > 0 && measuring {
                    self.acc.acked_packets[ss] += 1;
                    if let Some(r) = rtt {
                        self.acc.rtt_sum += r;
                        self.acc.rtt_samples += 1;
                    }
                }
                if out.errored > 0 {
                    flow.requeue(self.frame);
                }
                if out.triple_dups > 0 {
                    if measuring {
                        self.acc.triple_dups += u64::from(out.triple_dups);
                        self.acc.loss_indications += u64::from(out.triple_dups);
                    }
                    self.tcp_event(ss, TcpEventKind::TripleDup);
                }
            }
        }

        // window-limited release into the MAC queue
        for flow in &mut self.flows {
            if self.frame < flow.start_frame {
                continue;
            }
            let n = flow.tcp.sendable();
            for _ in 0..n {
                flow.queue.push_back(QueuedPacket {
                    release_frame: self.frame,
                    retransmit: false,
                });
            }
            flow.tcp.on_release(n);
        }

        // timeout clocks
        for ss in 0..self.flows.len() {
            if self.flows[ss].tcp.tick(tf) {
                self.flows[ss].tcp.on_timeout();
                if measuring {
                    self.acc.timeouts += 1;
                    self.acc.loss_indications += 1;
                }
                self.tcp_event(ss, TcpEventKind::Timeout);
            }
        }

        self.channel.advance_frame(&mut self.channel_rngs);
        let snr_db = self.channel.snr_db();
        for (ss, &s) in snr_db.iter().enumerate() {
            if s.is_nan() {
                return Err(Error::NonFinite {
                    what: "snr_db",
                    frame: self.frame,
                    ss: Some(ss),
                });
            }
        }

        if self.frame == 0 || self.scheduler.epoch_finished() {
            let reports: Vec<PollReport> = self
                .flows
                .iter()
                .map(|f| PollReport {
                    cwnd: f.tcp.cwnd,
                    tto_s: f.tcp.tto_s,
                    rto_s: f.tcp.rto_s,
                    rtt_s: f.tcp.rtt_estimate_s,
                })
                .collect();
            self.scheduler.begin_epoch(&reports, &snr_db, &self.table)?;
            if measuring {
                self.acc.epoch_sum += f64::from(self.scheduler.epoch_frames);
                self.acc.epochs += 1;
            }
        }

        self.scheduler.schedule_frame(&snr_db, &self.table)?;
        self.check_finite()?;

        // transmission
        let slot_s = self.config.timing.slot_duration_s;
        let pl = u64::from(self.config.packet_len_bits);
        let mut used_total = 0u64;
        for (ss, &snr) in snr_db.iter().enumerate() {
            let grant = self.scheduler.stations[ss];
            if grant.slots_granted == 0 {
                continue;
            }
            let slot_bits = (grant.rate_bps * slot_s).round() as u64;
            let error_prob = self.packet_error_prob(snr, grant.rate_bps);
            let flow = &mut self.flows[ss];
            let mut budget = u64::from(grant.slots_granted) * slot_bits;
            let mut sent = 0u64;
            while budget > 0 {
                let Some(head) = flow.queue.front().copied() else {
                    break;
                };
                let need = pl - flow.head_sent_bits;
                if budget >= need {
                    budget -= need;
                    sent += need;
                    flow.queue.pop_front();
                    flow.head_sent_bits = 0;
                    flow.acks.push_back(PendingAck {
                        due_frame: self.frame + self.base_rtt_frames,
                        release_frame: head.release_frame,
                        retransmit: head.retransmit,
                        error_prob,
                    });
                    if measuring {
                        self.acc.packets_transmitted += 1;
                    }
                } else {
                    flow.head_sent_bits += budget;
                    sent += budget;
                    budget = 0;
                }
            }
            used_total += sent.div_ceil(slot_bits);
        }

        if measuring {
            let acc = &mut self.acc;
            acc.frames += 1;
            acc.used_slots += used_total;
            let min_th = self.table.min_threshold_db();
            for (ss, flow) in self.flows.iter().enumerate() {
                acc.cwnd_sum += f64::from(flow.tcp.cwnd);
                acc.rto_sum += flow.tcp.rto_s;
                acc.granted_slots[ss] += u64::from(self.scheduler.stations[ss].slots_granted);
                acc.station_frames += 1;
                if snr_db[ss] >= min_th {
                    acc.above_threshold += 1;
                }
            }
        }
        self.record_traces(&snr_db);
        self.frame += 1;
        Ok(())
    }

    fn packet_error_prob(&self, snr_db: f64, rate_bps: f64) -> f64 {
        let pl = f64::from(self.config.packet_len_bits);
        let from_ber = |ber: f64| -(pl * (-ber).ln_1p()).exp_m1();
        match self.config.packet_errors {
            PacketErrorModel::None => 0.0,
            PacketErrorModel::Fixed(p) => p,
            PacketErrorModel::TargetBer => from_ber(self.config.target_ber),
            PacketErrorModel::SnrDependent => self
                .table
                .rows()
                .iter()
                .find(|r| r.rate_bps == rate_bps)
                .map_or(0.0, |row| from_ber(row.ber_at(db_to_linear(snr_db)))),
        }
    }

    fn check_finite(&self) -> Result<()> {
        for (ss, f) in self.flows.iter().enumerate() {
            for (what, v) in [
                ("rtt_estimate_s", f.tcp.rtt_estimate_s),
                ("rto_s", f.tcp.rto_s),
                ("tto_s", f.tcp.tto_s),
            ] {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what,
                        frame: self.frame,
                        ss: Some(ss),
                    });
                }
            }
        }
        for (ss, st) in self.scheduler.stations.iter().enumerate() {
            for (what, v) in [
                ("demand_bits", st.demand_bits),
                ("deficit", st.deficit),
                ("weight", st.weight),
                ("deadline_s", st.deadline_s),
            ] {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what,
                        frame: self.frame,
                        ss: Some(ss),
                    });
                }
            }
        }
        Ok(())
    }

    fn record_traces(&mut self, snr_db: &[f64]) {
        if self.trace_opts.snr {
            for (ss, &s) in snr_db.iter().enumerate() {
                self.traces.snr.push(SnrSample {
                    run: self.run_index,
                    frame: self.frame,
                    ss,
                    snr_db: s,
                });
            }
        }
        if self.trace_opts.allocation {
            for (ss, st) in self.scheduler.stations.iter().enumerate() {
                self.traces.allocation.push(AllocationSample {
                    run: self.run_index,
                    frame: self.frame,
                    ss,
                    rate_bps: st.rate_bps,
                    slots: st.slots_granted,
                    demand_bits: st.demand_bits,
                    dc: st.scaled_deficit,
                    weight: st.weight,
                    deadline_s: st.deadline_s,
                });
            }
        }
    }

    /// Runs the remaining frames and summarises the measured ones.
    pub fn finish(mut self) -> Result<(MetricsRecord, RunTraces)> {
        while self.frame < self.config.num_frames {
            self.step()?;
        }
        Ok((self.record()?, self.traces))
    }

    fn record(&self) -> Result<MetricsRecord> {
        let acc = &self.acc;
        let n = self.flows.len() as f64;
        if acc.frames == 0 {
            return Err(Error::Domain("no measured frames".into()));
        }
        let duration = acc.frames as f64 * self.config.timing.frame_duration_s;
        let pl = f64::from(self.config.packet_len_bits);
        let per_ss_throughput_bps: Vec<f64> = acc
            .acked_packets
            .iter()
            .map(|&p| p as f64 * pl / duration)
            .collect();
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let slots_f: Vec<f64> = acc.granted_slots.iter().map(|&s| s as f64).collect();
        let record = MetricsRecord {
            avg_cwnd: acc.cwnd_sum / (acc.frames as f64 * n),
            avg_throughput_bps: per_ss_throughput_bps.iter().sum::<f64>() / n,
            slot_utilization: slot_utilization(
                acc.used_slots,
                self.config.timing.uplink_slots_per_frame,
                acc.frames,
            )?,
            jfi: jfi(&slots_f).unwrap_or(0.0),
            jfi_throughput: jfi(&per_ss_throughput_bps).unwrap_or(0.0),
            loss_rate: ratio(acc.loss_indications as f64, acc.packets_transmitted as f64),
            p_schedulable: ratio(acc.above_threshold as f64, acc.station_frames as f64),
            mean_rtt_s: ratio(acc.rtt_sum, acc.rtt_samples as f64),
            mean_rto_s: acc.rto_sum / (acc.frames as f64 * n),
            mean_epoch_frames: ratio(acc.epoch_sum, acc.epochs as f64),
            timeouts: acc.timeouts,
            triple_dups: acc.triple_dups,
            packets_transmitted: acc.packets_transmitted,
            frames: acc.frames,
            per_ss_throughput_bps,
            per_ss_slots: acc.granted_slots.clone(),
        };
        Ok(record)
    }
}

/// One run with the given index; seeds derive from `(rng_seed, run_index)`.
pub fn run_single(config: &ExperimentConfig, run_index: u32) -> Result<MetricsRecord> {
    Ok(RunContext::new(config, run_index, TraceOptions::default())?
        .finish()?
        .0)
}

pub fn run_single_traced(
    config: &ExperimentConfig,
    run_index: u32,
    trace: TraceOptions,
) -> Result<(MetricsRecord, RunTraces)> {
    RunContext::new(config, run_index, trace)?.finish()
}

/// Every run of the experiment, in run-index order. Runs execute in parallel.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    (0..config.num_runs)
        .into_par_iter()
        .map(|run| run_single(config, run))
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateMetrics> {
    Ok(AggregateMetrics::from_runs(&run_records(config)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    SigmaDb,
    CwndMax,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::SigmaDb => "sigma_db",
            SweepParameter::CwndMax => "cwnd_max",
        }
    }

    pub fn apply(self, config: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut c = config.clone();
        match self {
            SweepParameter::SigmaDb => c.shadowing_sigma_db = value,
            SweepParameter::CwndMax => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX)) {
                    return Err(Error::Domain(format!(
                        "cwnd_max {value} must be a positive integer"
                    )));
                }
                c.cwnd_max = value as u32;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// One aggregate per value, in the order given.
pub fn sweep(
    config: &ExperimentConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<(f64, AggregateMetrics)>> {
    if values.is_empty() {
        return Err(Error::Domain("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| Ok((v, run_experiment(&parameter.apply(config, v)?)?)))
        .collect()
}
