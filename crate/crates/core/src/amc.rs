//! Adaptive modulation: SNR thresholds from a target BER, and per-frame rate selection.
//!
//! The threshold of a scheme with spectral efficiency `R/B` is
//! `(2^(R/B) - 1) * MI`, where the modulation index `MI` is
//! `-ln(5 p_b)/1.5` below 4 bps/Hz and `-ln(0.5 p_b)/1.5` from 4 bps/Hz up.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulationScheme {
    Qpsk,
    Qam16,
    Qam64,
    /// Rows beyond the third in a caller-supplied rate list.
    Other(u8),
}

impl ModulationScheme {
    fn for_row(index: usize) -> Self {
        match index {
            0 => Self::Qpsk,
            1 => Self::Qam16,
            2 => Self::Qam64,
            i => Self::Other(i as u8),
        }
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Qpsk => f.write_str("QPSK"),
            Self::Qam16 => f.write_str("16-QAM"),
            Self::Qam64 => f.write_str("64-QAM"),
            Self::Other(i) => write!(f, "MOD{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationRow {
    pub scheme: ModulationScheme,
    pub rate_bps: f64,
    pub spectral_eff: f64,
    pub mod_index: f64,
    pub snr_th_db: f64,
}

impl ModulationRow {
    pub fn snr_th_linear(&self) -> f64 {
        db_to_linear(self.snr_th_db)
    }

    /// Bit error rate of this scheme at a linear SNR; inverse of the threshold
    /// relation, so it returns the target BER exactly at `snr_th_db`.
    pub fn ber_at(&self, snr_linear: f64) -> f64 {
        let scale = if self.spectral_eff < 4.0 { 0.2 } else { 2.0 };
        let m_minus_1 = self.spectral_eff.exp2() - 1.0;
        (scale * (-1.5 * snr_linear / m_minus_1).exp()).min(0.5)
    }
}

/// Rate selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Only the lowest-rate scheme (QPSK) is ever used.
    FixedQpsk,
    /// Highest-rate scheme whose threshold the SNR meets.
    Adaptive,
}

/// Modulation schemes sorted by rate, with strictly increasing thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationTable {
    rows: Vec<ModulationRow>,
    pub bandwidth_hz: f64,
    pub target_ber: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Modulation index for a target BER and spectral efficiency (bps/Hz).
pub fn modulation_index(ber: f64, spectral_eff: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 1.0) {
        return Err(Error::Domain(format!("BER {ber} outside (0, 1)")));
    }
    if !(spectral_eff > 0.0 && spectral_eff.is_finite()) {
        return Err(Error::Domain(format!(
            "spectral efficiency {spectral_eff} must be > 0"
        )));
    }
    let factor = if spectral_eff < 4.0 { 5.0 } else { 0.5 };
    Ok(-(factor * ber).ln() / 1.5)
}

/// Minimum SNR (dB) that sustains `rate_bps` over `bandwidth_hz` at the target BER.
pub fn snr_threshold(rate_bps: f64, bandwidth_hz: f64, ber: f64) -> Result<f64> {
    if !(rate_bps > 0.0 && bandwidth_hz > 0.0) {
        return Err(Error::Domain(format!(
            "rate {rate_bps} and bandwidth {bandwidth_hz} must both be > 0"
        )));
    }
    let se = rate_bps / bandwidth_hz;
    let mi = modulation_index(ber, se)?;
    if !(mi > 0.0) {
        return Err(Error::Domain(format!(
            "modulation index {mi} is not positive for BER {ber}; no threshold exists"
        )));
    }
    Ok(linear_to_db((se.exp2() - 1.0) * mi))
}

impl ModulationTable {
    /// Builds the table for the 40/80/120 Mbps QPSK/16-QAM/64-QAM set.
    pub fn build(bandwidth_hz: f64, ber: f64) -> Result<Self> {
        Self::with_rates(bandwidth_hz, ber, &crate::config::DEFAULT_RATES_BPS)
    }

    pub fn with_rates(bandwidth_hz: f64, ber: f64, rates_bps: &[f64]) -> Result<Self> {
        if rates_bps.is_empty() {
            return Err(Error::Domain(
                "modulation table needs at least one rate".into(),
            ));
        }
        let mut rates = rates_bps.to_vec();
        rates.sort_by(f64::total_cmp);
        let rows = rates
            .iter()
            .enumerate()
            .map(|(i, &rate_bps)| {
                let spectral_eff = rate_bps / bandwidth_hz;
                Ok(ModulationRow {
                    scheme: ModulationScheme::for_row(i),
                    rate_bps,
                    spectral_eff,
                    mod_index: modulation_index(ber, spectral_eff)?,
                    snr_th_db: snr_threshold(rate_bps, bandwidth_hz, ber)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(w) = rows.windows(2).find(|w| !(w[1].snr_th_db > w[0].snr_th_db)) {
            return Err(Error::Domain(format!(
                "thresholds not strictly increasing: {} dB then {} dB",
                w[0].snr_th_db, w[1].snr_th_db
            )));
        }
        Ok(Self {
            rows,
            bandwidth_hz,
            target_ber: ber,
        })
    }

    pub fn from_config(c: &crate::config::ExperimentConfig) -> Result<Self> {
        Self::with_rates(
            c.channel_bandwidth_hz,
            c.target_ber,
            &c.modulation_rates_bps,
        )
    }

    pub fn rows(&self) -> &[ModulationRow] {
        &self.rows
    }

    pub fn lowest(&self) -> &ModulationRow {
        &self.rows[0]
    }

    /// `R_min`, the lowest rate in the table.
    pub fn r_min_bps(&self) -> f64 {
        self.rows[0].rate_bps
    }

    pub fn min_threshold_db(&self) -> f64 {
        self.rows[0].snr_th_db
    }

    /// Row used at `snr_db`, or `None` when the SNR is below the lowest threshold.
    /// Thresholds are inclusive.
    pub fn select(&self, snr_db: f64, mode: RateMode) -> Option<&ModulationRow> {
        match mode {
            RateMode::FixedQpsk => Some(self.lowest()).filter(|r| snr_db >= r.snr_th_db),
            RateMode::Adaptive => self.rows.iter().rev().find(|r| snr_db >= r.snr_th_db),
        }
    }

    pub fn select_rate(&self, snr_db: f64, mode: RateMode) -> Option<f64> {
        self.select(snr_db, mode).map(|r| r.rate_bps)
    }
}

/// Writes the thresholds of each BER as side-by-side columns, one row per scheme.
pub fn write_table_csv<W: std::io::Write>(tables: &[ModulationTable], out: W) -> Result<()> {
    let first = tables
        .first()
        .ok_or_else(|| Error::Contract("no tables to write".into()))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "scheme".to_string(),
        "rate_mbps".to_string(),
        "spectral_eff_bps_hz".to_string(),
    ];
    header.extend(
        tables
            .iter()
            .map(|t| format!("snr_th_db_ber_{:e}", t.target_ber)),
    );
    w.write_record(&header)?;
    for (i, row) in first.rows().iter().enumerate() {
        let mut rec = vec![
            row.scheme.to_string(),
            (row.rate_bps / 1e6).to_string(),
            format!("{:.2}", row.spectral_eff),
        ];
        rec.extend(
            tables
                .iter()
                .map(|t| format!("{:.2}", t.rows()[i].snr_th_db)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
