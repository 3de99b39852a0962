//! Closed-form TCP send rate with polling delay, and its comparison with the
//! simulator.
//!
//! A station that misses a poll waits a geometric number of further epochs,
//! `E[L] = 1/p - 1`, where `p` is the chance its SNR clears the lowest
//! threshold. Each missed epoch adds `k * T_f` to the round trip. The send
//! rate is the Reno steady-state model evaluated at that stretched RTT.

use std::io::Write;

use crate::config::ExperimentConfig;
use crate::engine::{run_records, SweepParameter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    /// Probability that a station is schedulable at a poll.
    pub p: f64,
    /// Polling epoch in frames.
    pub k: f64,
    pub frame_duration_s: f64,
    /// Round-trip time without polling delay.
    pub rtt_w_s: f64,
    /// Packets acknowledged per ACK.
    pub b: f64,
    pub to_s: f64,
    /// Loss indications per transmitted packet.
    pub p_w: f64,
    /// Window cap in packets; `f64::INFINITY` for none.
    pub cwnd_max: f64,
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Domain(format!("{what} = {v} out of range")));
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad("p", self.p);
        }
        if !(0.0..=1.0).contains(&self.p_w) {
            return bad("p_w", self.p_w);
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return bad("k", self.k);
        }
        for (what, v) in [
            ("frame_duration_s", self.frame_duration_s),
            ("rtt_w_s", self.rtt_w_s),
            ("to_s", self.to_s),
            ("b", self.b),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(what, v);
            }
        }
        if !(self.cwnd_max > 0.0) {
            return bad("cwnd_max", self.cwnd_max);
        }
        Ok(())
    }
}

/// Expected number of extra polling epochs before a station is served.
pub fn expected_wait_epochs(p: f64) -> Result<f64> {
    if p == 0.0 {
        return Err(Error::Domain("waiting time diverges for p = 0".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p = {p} must lie in (0, 1]")));
    }
    Ok(1.0 / p - 1.0)
}

/// `RTT_wr = RTT_w + E[L] * k * T_f`.
pub fn adjusted_rtt(params: &AnalysisParams) -> Result<f64> {
    params.validate()?;
    Ok(params.rtt_w_s + expected_wait_epochs(params.p)? * params.k * params.frame_duration_s)
}

/// Send rate in packets per second: the smaller of the window limit and the
/// loss-driven Reno rate. `use_adjusted` selects the polling-stretched RTT.
pub fn send_rate(params: &AnalysisParams, use_adjusted: bool) -> Result<f64> {
    params.validate()?;
    if params.p_w == 0.0 && params.cwnd_max.is_infinite() {
        return Err(Error::Domain(
            "send rate unbounded: no losses and no window cap".into(),
        ));
    }
    let rtt = if use_adjusted {
        adjusted_rtt(params)?
    } else {
        params.rtt_w_s
    };
    let window_limit = params.cwnd_max / rtt;
    if params.p_w == 0.0 {
        return Ok(window_limit);
    }
    let (b, pw) = (params.b, params.p_w);
    let denom = rtt * (2.0 * b * pw / 3.0).sqrt()
        + params.to_s * (3.0 * (3.0 * b * pw / 8.0).sqrt()).min(1.0) * pw * (1.0 + 32.0 * pw * pw);
    Ok(window_limit.min(1.0 / denom))
}

/// One row of the model-versus-simulation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub cwnd_max: u32,
    /// Mean simulated per-flow goodput.
    pub sim_bps: f64,
    pub model_bps: f64,
    pub rel_err: f64,
    /// Inputs measured from the simulation.
    pub params: AnalysisParams,
}

/// Runs the window sweep and evaluates the model with the measured `p`,
/// `p_w`, mean RTT, mean timeout and mean epoch length of each point.
pub fn compare_with_simulation(
    config: &ExperimentConfig,
    cwnd_max_values: &[u32],
) -> Result<Vec<ComparisonRow>> {
    if cwnd_max_values.is_empty() {
        return Err(Error::Domain(
            "comparison needs at least one cwnd_max".into(),
        ));
    }
    let pl = f64::from(config.packet_len_bits);
    let tf = config.timing.frame_duration_s;
    cwnd_max_values
        .iter()
        .map(|&w| {
            let c = SweepParameter::CwndMax.apply(config, f64::from(w))?;
            let recs = run_records(&c)?;
            let n = recs.len() as f64;
            let mean =
                |f: fn(&crate::metrics::MetricsRecord) -> f64| recs.iter().map(f).sum::<f64>() / n;
            let sim_bps = mean(|r| r.avg_throughput_bps);
            let p = mean(|r| r.p_schedulable);
            let k = mean(|r| r.mean_epoch_frames);
            let params = AnalysisParams {
                p,
                k,
                frame_duration_s: tf,
                rtt_w_s: mean(|r| r.mean_rtt_s),
                b: f64::from(c.acks_per_packet),
                to_s: mean(|r| r.mean_rto_s),
                p_w: mean(|r| r.loss_rate),
                cwnd_max: f64::from(w),
            };
            let model_bps = send_rate(&params, true)? * pl;
            Ok(ComparisonRow {
                cwnd_max: w,
                sim_bps,
                model_bps,
                rel_err: (model_bps - sim_bps).abs() / sim_bps,
                params,
            })
        })
        .collect()
}

/// CSV with columns `cwnd_max,sim_bps,model_bps,rel_err`.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cwnd_max", "sim_bps", "model_bps", "rel_err"])?;
    for r in rows {
        for v in [r.sim_bps, r.model_bps, r.rel_err] {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "comparison row",
                    frame: 0,
                    ss: None,
                });
            }
        }
        w.write_record([
            r.cwnd_max.to_string(),
            r.sim_bps.to_string(),
            r.model_bps.to_string(),
            r.rel_err.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AnalysisParams {
        AnalysisParams {
            p: 1.0,
            k: 50.0,
            frame_duration_s: 2e-3,
            rtt_w_s: 0.1,
            b: 1.0,
            to_s: 0.2,
            p_w: 0.01,
            cwnd_max: f64::INFINITY,
        }
    }

    #[test]
    fn wait_examples() {
        assert_eq!(expected_wait_epochs(1.0).unwrap(), 0.0);
        assert_eq!(expected_wait_epochs(0.5).unwrap(), 1.0);
        assert!((expected_wait_epochs(0.87).unwrap() - 0.149425).abs() < 1e-6);
        assert!(expected_wait_epochs(0.0).is_err());
        assert!(expected_wait_epochs(1.5).is_err());
    }

    #[test]
    fn adjusted_rtt_examples() {
        let mut p = params();
        assert_eq!(adjusted_rtt(&p).unwrap(), 0.1);
        p.p = 0.87;
        assert!((adjusted_rtt(&p).unwrap() - 0.114943).abs() < 1e-6);
        p.k = 0.0;
        assert_eq!(adjusted_rtt(&p).unwrap(), 0.1);
    }

    #[test]
    fn window_limited_branch() {
        let mut p = params();
        p.p = 0.87;
        p.p_w = 0.0;
        p.cwnd_max = 70.0;
        let b = send_rate(&p, true).unwrap();
        assert!((b - 70.0 / 0.114943).abs() < 0.1, "{b}");
        assert!((b - 609.0).abs() < 0.5);
    }

    #[test]
    fn loss_limited_branch_matches_direct_evaluation() {
        let p = params();
        let direct = 1.0
            / (0.1 * (2.0f64 * 0.01 / 3.0).sqrt()
                + 0.2 * (3.0 * (3.0f64 * 0.01 / 8.0).sqrt()).min(1.0) * 0.01 * (1.0 + 32.0 * 1e-4));
        assert!((send_rate(&p, false).unwrap() / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_rate_is_an_error() {
        let mut p = params();
        p.p_w = 0.0;
        assert!(send_rate(&p, false).is_err());
    }

    #[test]
    fn longer_rtt_lowers_the_rate() {
        let mut p = params();
        let fast = send_rate(&p, false).unwrap();
        p.rtt_w_s = 0.2;
        assert!(send_rate(&p, false).unwrap() < fast);
    }

    #[test]
    fn csv_layout() {
        let row = ComparisonRow {
            cwnd_max: 70,
            sim_bps: 1.5e6,
            model_bps: 1.2e6,
            rel_err: 0.2,
            params: params(),
        };
        let mut buf = Vec::new();
        write_comparison_csv(&[row], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cwnd_max,sim_bps,model_bps,rel_err\n70,1500000,1200000,0.2\n"
        );
    }
}
