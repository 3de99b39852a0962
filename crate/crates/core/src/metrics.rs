//! Fairness and throughput metrics.

use crate::error::{Error, Result};

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`.
pub fn jfi(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Domain("JFI of an empty vector".into()));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Domain(format!(
            "JFI input {x} must be finite and non-negative"
        )));
    }
    let sum: f64 = xs.iter().sum();
    let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return Err(Error::Domain("JFI of an all-zero vector".into()));
    }
    Ok(sum * sum / (xs.len() as f64 * sum_sq))
}

/// `min(r, 1)`; rejects negative ratios.
pub fn clamp_ratio(r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!(
            "throughput ratio {r} must be non-negative"
        )));
    }
    Ok(r.min(1.0))
}

fn clamped_ratios(throughput: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    if throughput.len() != baseline.len() || throughput.is_empty() {
        return Err(Error::Domain(format!(
            "{} throughputs against {} baseline values",
            throughput.len(),
            baseline.len()
        )));
    }
    throughput
        .iter()
        .zip(baseline)
        .map(|(&t, &b)| {
            if !(b > 0.0) {
                return Err(Error::Domain(format!(
                    "baseline throughput {b} must be positive"
                )));
            }
            clamp_ratio(t / b)
        })
        .collect()
}

/// Worst-case throughput fairness: the smallest clamped ratio of a
/// scheduler's per-station throughput to the baseline's.
pub fn wctfi(throughput: &[f64], baseline: &[f64]) -> Result<f64> {
    Ok(clamped_ratios(throughput, baseline)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Throughput fairness: Jain's index over the clamped ratios.
pub fn tfi(throughput: &[f64], baseline: &[f64]) -> Result<f64> {
    jfi(&clamped_ratios(throughput, baseline)?)
}

/// Fraction of uplink slots granted.
pub fn slot_utilization(used_slots: u64, slots_per_frame: u32, frames: u64) -> Result<f64> {
    let total = u64::from(slots_per_frame) * frames;
    if total == 0 {
        return Err(Error::Domain("slot utilization over zero frames".into()));
    }
    Ok(used_slots as f64 / total as f64)
}

/// Measurements of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsRecord {
    /// Time-averaged window over all flows, in packets.
    pub avg_cwnd: f64,
    /// Mean per-flow goodput in bit/s.
    pub avg_throughput_bps: f64,
    pub per_ss_throughput_bps: Vec<f64>,
    pub per_ss_slots: Vec<u64>,
    pub slot_utilization: f64,
    /// Jain's index over granted slots.
    pub jfi: f64,
    /// Jain's index over per-station goodput.
    pub jfi_throughput: f64,
    /// Loss indications per transmitted packet.
    pub loss_rate: f64,
    /// Fraction of station-frames whose SNR cleared the lowest threshold.
    pub p_schedulable: f64,
    pub mean_rtt_s: f64,
    pub mean_rto_s: f64,
    pub mean_epoch_frames: f64,
    pub timeouts: u64,
    pub triple_dups: u64,
    pub packets_transmitted: u64,
    pub frames: u64,
}

/// Mean and sample standard deviation across runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Cross-run summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateMetrics {
    pub runs: usize,
    pub avg_cwnd: Stat,
    pub avg_throughput_bps: Stat,
    pub slot_utilization: Stat,
    pub jfi: Stat,
    pub jfi_throughput: Stat,
    pub loss_rate: Stat,
    pub p_schedulable: Stat,
    pub mean_rtt_s: Stat,
    pub mean_rto_s: Stat,
    pub mean_epoch_frames: Stat,
    pub timeouts: Stat,
    pub triple_dups: Stat,
    pub per_ss_throughput_bps: Vec<Stat>,
}

impl AggregateMetrics {
    pub fn from_runs(records: &[MetricsRecord]) -> Self {
        let field =
            |f: fn(&MetricsRecord) -> f64| Stat::of(&records.iter().map(f).collect::<Vec<_>>());
        let n_ss = records.first().map_or(0, |r| r.per_ss_throughput_bps.len());
        let per_ss_throughput_bps = (0..n_ss)
            .map(|i| {
                Stat::of(
                    &records
                        .iter()
                        .map(|r| r.per_ss_throughput_bps[i])
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        Self {
            runs: records.len(),
            avg_cwnd: field(|r| r.avg_cwnd),
            avg_throughput_bps: field(|r| r.avg_throughput_bps),
            slot_utilization: field(|r| r.slot_utilization),
            jfi: field(|r| r.jfi),
            jfi_throughput: field(|r| r.jfi_throughput),
            loss_rate: field(|r| r.loss_rate),
            p_schedulable: field(|r| r.p_schedulable),
            mean_rtt_s: field(|r| r.mean_rtt_s),
            mean_rto_s: field(|r| r.mean_rto_s),
            mean_epoch_frames: field(|r| r.mean_epoch_frames),
            timeouts: field(|r| r.timeouts as f64),
            triple_dups: field(|r| r.triple_dups as f64),
            per_ss_throughput_bps,
        }
    }
}
