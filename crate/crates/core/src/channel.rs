//! Per-station uplink SNR: distance path loss, block-held log-normal shadowing,
//! per-frame Rayleigh fading and AWGN.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::amc::{db_to_linear, linear_to_db, ModulationTable};
use crate::config::{ExperimentConfig, FadingModel};
use crate::error::{Error, Result};

/// Reference distance for path-loss normalisation.
pub const REFERENCE_DISTANCE_KM: f64 = 1.0;

/// Linear power gain `(d_ref / d)^gamma`.
pub fn pathloss_gain(distance_km: f64, gamma: f64) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::Domain(format!(
            "distance {distance_km} km must be > 0"
        )));
    }
    Ok((REFERENCE_DISTANCE_KM / distance_km).powf(gamma))
}

/// Transmit power putting the median edge SNR `edge_margin_db` above the
/// lowest modulation threshold. Fading is averaged to its mean and shadowing
/// taken at its median (0 dB); the edge is the farthest station.
pub fn calibrate_tx_power(config: &ExperimentConfig, table: &ModulationTable) -> Result<f64> {
    let d_max = config.distances_km.iter().copied().fold(f64::NAN, f64::max);
    let gain = pathloss_gain(d_max, config.path_loss_exponent)?;
    let target = db_to_linear(table.min_threshold_db() + config.edge_margin_db);
    Ok(target * config.noise_psd * config.channel_bandwidth_hz / (gain * config.fading_mean_power))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsChannel {
    pub distance_km: f64,
    pub pathloss_gain: f64,
    pub shadow_gain_db: f64,
    pub shadow_frames_left: u32,
    pub fading_gain: f64,
    pub snr_linear: f64,
}

impl SsChannel {
    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.snr_linear)
    }
}

/// Channel of every station in one run.
#[derive(Debug, Clone)]
pub struct ChannelState {
    pub stations: Vec<SsChannel>,
    pub tx_power: f64,
    noise_power: f64,
    shadowing: Normal<f64>,
    shadow_block_frames: u32,
    fading: Option<Exp<f64>>,
    fading_mean_power: f64,
}

impl ChannelState {
    /// Calibrated state; the first [`advance_frame`](Self::advance_frame) draws
    /// the first shadowing block.
    pub fn new(config: &ExperimentConfig, table: &ModulationTable) -> Result<Self> {
        let tx_power = calibrate_tx_power(config, table)?;
        let stations = config
            .distances_km
            .iter()
            .map(|&d| {
                Ok(SsChannel {
                    distance_km: d,
                    pathloss_gain: pathloss_gain(d, config.path_loss_exponent)?,
                    shadow_gain_db: 0.0,
                    shadow_frames_left: 0,
                    fading_gain: config.fading_mean_power,
                    snr_linear: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let shadowing = Normal::new(0.0, config.shadowing_sigma_db)
            .map_err(|e| Error::Domain(format!("shadowing sigma: {e}")))?;
        let fading = match config.fading {
            FadingModel::Rayleigh => Some(
                Exp::new(1.0 / config.fading_mean_power)
                    .map_err(|e| Error::Domain(format!("fading mean: {e}")))?,
            ),
            FadingModel::None => None,
        };
        Ok(Self {
            stations,
            tx_power,
            noise_power: config.noise_psd * config.channel_bandwidth_hz,
            shadowing,
            shadow_block_frames: config.shadow_block_frames,
            fading,
            fading_mean_power: config.fading_mean_power,
        })
    }

    /// Advances one station by a frame using that station's own stream.
    pub fn advance_station<R: Rng + ?Sized>(&mut self, ss: usize, rng: &mut R) {
        let st = &mut self.stations[ss];
        if st.shadow_frames_left == 0 {
            st.shadow_gain_db = self.shadowing.sample(rng);
            st.shadow_frames_left = self.shadow_block_frames;
        }
        st.shadow_frames_left -= 1;
        st.fading_gain = match &self.fading {
            Some(exp) => exp.sample(rng),
            None => self.fading_mean_power,
        };
        st.snr_linear =
            self.tx_power * st.pathloss_gain * db_to_linear(st.shadow_gain_db) * st.fading_gain
                / self.noise_power;
    }

    /// Advances every station; `rngs[i]` is station `i`'s stream.
    pub fn advance_frame<R: Rng>(&mut self, rngs: &mut [R]) {
        debug_assert_eq!(rngs.len(), self.stations.len());
        for (ss, rng) in rngs.iter_mut().enumerate() {
            self.advance_station(ss, rng);
        }
    }

    pub fn snr_db(&self) -> Vec<f64> {
        self.stations.iter().map(SsChannel::snr_db).collect()
    }
}
