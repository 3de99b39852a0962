//! Experiment summaries and CSV output.
//!
//! A summary row aggregates the runs of one scheduler at one configuration,
//! together with the transport-layer fairness of its per-station throughput
//! against a round-robin baseline driven by the same seeds (and therefore the
//! same channel realisations).

use std::io::Write;

use crate::config::{ExperimentConfig, SchedulerKind};
use crate::engine::{run_records, RunTraces, SweepParameter};
use crate::error::{Error, Result};
use crate::metrics::{tfi, wctfi, AggregateMetrics, MetricsRecord, Stat};

/// Round-robin variant with the same modulation mode.
pub fn baseline_kind(kind: SchedulerKind) -> SchedulerKind {
    if kind.adaptive() {
        SchedulerKind::RrA
    } else {
        SchedulerKind::Rr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheduler: SchedulerKind,
    pub sigma_db: f64,
    pub cwnd_max: u32,
    pub frames: u64,
    pub metrics: AggregateMetrics,
    pub wctfi: Stat,
    pub tfi: Stat,
}

/// WCTFI and TFI of each run against its paired baseline run.
pub fn paired_fairness(
    records: &[MetricsRecord],
    baseline: &[MetricsRecord],
) -> Result<(Stat, Stat)> {
    if records.len() != baseline.len() {
        return Err(Error::Domain(format!(
            "{} runs paired with {} baseline runs",
            records.len(),
            baseline.len()
        )));
    }
    let mut w = Vec::with_capacity(records.len());
    let mut t = Vec::with_capacity(records.len());
    for (r, b) in records.iter().zip(baseline) {
        w.push(wctfi(&r.per_ss_throughput_bps, &b.per_ss_throughput_bps)?);
        t.push(tfi(&r.per_ss_throughput_bps, &b.per_ss_throughput_bps)?);
    }
    Ok((Stat::of(&w), Stat::of(&t)))
}

fn summary_row(
    config: &ExperimentConfig,
    records: &[MetricsRecord],
    baseline: &[MetricsRecord],
) -> Result<SummaryRow> {
    let (w, t) = paired_fairness(records, baseline)?;
    Ok(SummaryRow {
        scheduler: config.scheduler_kind,
        sigma_db: config.shadowing_sigma_db,
        cwnd_max: config.cwnd_max,
        frames: config.measured_frames(),
        metrics: AggregateMetrics::from_runs(records),
        wctfi: w,
        tfi: t,
    })
}

/// How each scheduler's window cap is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwndPolicy {
    /// Use the configured `cwnd_max` for every scheduler.
    FromConfig,
    /// 70 packets with adaptive modulation, 60 with QPSK only.
    PerScheduler,
}

/// `config` with `kind` as scheduler and the window cap chosen by `cwnd`.
pub fn scheduler_config(
    config: &ExperimentConfig,
    kind: SchedulerKind,
    cwnd: CwndPolicy,
) -> ExperimentConfig {
    match cwnd {
        CwndPolicy::PerScheduler => config.clone().with_scheduler(kind),
        CwndPolicy::FromConfig => ExperimentConfig {
            scheduler_kind: kind,
            ..config.clone()
        },
    }
}

/// One row per scheduler, in the order given; `config`'s own scheduler is
/// ignored.
pub fn summarize(
    config: &ExperimentConfig,
    schedulers: &[SchedulerKind],
    cwnd: CwndPolicy,
) -> Result<Vec<SummaryRow>> {
    if schedulers.is_empty() {
        return Err(Error::Domain("no scheduler selected".into()));
    }
    let mut cache: Vec<(SchedulerKind, Vec<MetricsRecord>)> = Vec::new();
    let mut records_for = |kind: SchedulerKind| -> Result<Vec<MetricsRecord>> {
        if let Some((_, r)) = cache.iter().find(|(k, _)| *k == kind) {
            return Ok(r.clone());
        }
        let r = run_records(&scheduler_config(config, kind, cwnd))?;
        cache.push((kind, r.clone()));
        Ok(r)
    };
    schedulers
        .iter()
        .map(|&kind| {
            let recs = records_for(kind)?;
            let base = records_for(baseline_kind(kind))?;
            summary_row(&scheduler_config(config, kind, cwnd), &recs, &base)
        })
        .collect()
}

/// Rows ordered by sweep value, then scheduler.
pub fn summarize_sweep(
    config: &ExperimentConfig,
    schedulers: &[SchedulerKind],
    parameter: SweepParameter,
    values: &[f64],
    cwnd: CwndPolicy,
) -> Result<Vec<SummaryRow>> {
    if values.is_empty() {
        return Err(Error::Domain("sweep needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &v in values {
        let cwnd = if parameter == SweepParameter::CwndMax {
            CwndPolicy::FromConfig
        } else {
            cwnd
        };
        rows.extend(summarize(&parameter.apply(config, v)?, schedulers, cwnd)?);
    }
    Ok(rows)
}

const STAT_COLUMNS: [&str; 14] = [
    "avg_cwnd",
    "avg_throughput_bps",
    "slot_utilization",
    "jfi",
    "jfi_throughput",
    "wctfi",
    "tfi",
    "loss_rate",
    "p_schedulable",
    "mean_rtt_s",
    "mean_rto_s",
    "mean_epoch_frames",
    "timeouts",
    "triple_dups",
];

fn row_stats(r: &SummaryRow) -> [Stat; 14] {
    let m = &r.metrics;
    [
        m.avg_cwnd,
        m.avg_throughput_bps,
        m.slot_utilization,
        m.jfi,
        m.jfi_throughput,
        r.wctfi,
        r.tfi,
        m.loss_rate,
        m.p_schedulable,
        m.mean_rtt_s,
        m.mean_rto_s,
        m.mean_epoch_frames,
        m.timeouts,
        m.triple_dups,
    ]
}

fn finite(v: f64, what: &'static str) -> Result<String> {
    if v.is_finite() {
        Ok(v.to_string())
    } else {
        Err(Error::NonFinite {
            what,
            frame: 0,
            ss: None,
        })
    }
}

/// Header `scheduler,sigma_db,cwnd_max,runs,frames` followed by a mean and a
/// `_std` column for every statistic.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Domain("no rows to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["scheduler", "sigma_db", "cwnd_max", "runs", "frames"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in STAT_COLUMNS {
        header.push(c.to_string());
        header.push(format!("{c}_std"));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.scheduler.as_str().to_string(),
            finite(r.sigma_db, "sigma_db")?,
            r.cwnd_max.to_string(),
            r.metrics.runs.to_string(),
            r.frames.to_string(),
        ];
        for (s, name) in row_stats(r).iter().zip(STAT_COLUMNS) {
            rec.push(finite(s.mean, name)?);
            rec.push(finite(s.std, name)?);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `run,frame,ss,snr_db`.
pub fn write_snr_trace<W: Write>(traces: &RunTraces, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "frame", "ss", "snr_db"])?;
    for s in &traces.snr {
        w.write_record([
            s.run.to_string(),
            s.frame.to_string(),
            s.ss.to_string(),
            finite(s.snr_db, "snr_db")?,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `run,time_s,ss,event,cwnd,ssthresh,rto`.
pub fn write_tcp_trace<W: Write>(traces: &RunTraces, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "time_s", "ss", "event", "cwnd", "ssthresh", "rto"])?;
    for e in &traces.tcp {
        w.write_record([
            e.run.to_string(),
            e.time_s.to_string(),
            e.ss.to_string(),
            e.event.as_str().to_string(),
            e.cwnd.to_string(),
            e.ssthresh.to_string(),
            e.rto_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `run,frame,ss,rate_bps,slots,demand_bits,dc,weight,deadline_s`.
pub fn write_allocation_trace<W: Write>(traces: &RunTraces, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run",
        "frame",
        "ss",
        "rate_bps",
        "slots",
        "demand_bits",
        "dc",
        "weight",
        "deadline_s",
    ])?;
    for a in &traces.allocation {
        w.write_record([
            a.run.to_string(),
            a.frame.to_string(),
            a.ss.to_string(),
            a.rate_bps.to_string(),
            a.slots.to_string(),
            finite(a.demand_bits, "demand_bits")?,
            finite(a.dc, "dc")?,
            finite(a.weight, "weight")?,
            finite(a.deadline_s, "deadline_s")?,
        ])?;
    }
    w.flush()?;
    Ok(())
}
