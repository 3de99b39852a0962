//! Experiment configuration, frame timing, and the flat `key=value` file format.
//!
//! A config file holds one `key = value` pair per line. Blank lines and lines
//! starting with `#` are ignored, arrays are comma separated, and unknown keys
//! are rejected so that a typo can never silently fall back to a default.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result, ValidationError};

/// Frame and slot timing of the TDD uplink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    pub frame_duration_s: f64,
    pub slot_duration_s: f64,
    pub uplink_slots_per_frame: u32,
    /// Share of the frame taken by the uplink subframe.
    pub uplink_fraction: f64,
}

impl FrameTiming {
    /// Derives the slot duration so that the uplink subframe holds exactly
    /// `uplink_slots_per_frame` slots.
    pub fn new(frame_duration_s: f64, uplink_slots_per_frame: u32, uplink_fraction: f64) -> Self {
        let slot_duration_s =
            uplink_fraction * frame_duration_s / f64::from(uplink_slots_per_frame.max(1));
        Self {
            frame_duration_s,
            slot_duration_s,
            uplink_slots_per_frame,
            uplink_fraction,
        }
    }

    /// Uplink subframe duration `T_ul`.
    pub fn uplink_duration_s(&self) -> f64 {
        self.uplink_fraction * self.frame_duration_s
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.frame_duration_s > 0.0) || !self.frame_duration_s.is_finite() {
            return Err(ValidationError::new("frame_duration_s", "must be > 0"));
        }
        if self.uplink_slots_per_frame < 1 {
            return Err(ValidationError::new(
                "uplink_slots_per_frame",
                "must be >= 1",
            ));
        }
        if !(self.uplink_fraction > 0.0 && self.uplink_fraction <= 1.0) {
            return Err(ValidationError::new(
                "uplink_fraction",
                "must lie in (0, 1]",
            ));
        }
        let lhs = f64::from(self.uplink_slots_per_frame) * self.slot_duration_s;
        let rhs = self.uplink_duration_s();
        if (lhs - rhs).abs() > 4.0 * f64::EPSILON * rhs {
            return Err(ValidationError::new(
                "slot_duration_s",
                format!(
                    "{} slots x {} s != uplink subframe {} s",
                    self.uplink_slots_per_frame, self.slot_duration_s, rhs
                ),
            ));
        }
        Ok(())
    }
}

impl Default for FrameTiming {
    /// 2 ms frames split evenly between downlink and uplink, 500 uplink data slots.
    fn default() -> Self {
        Self::new(2e-3, 500, 0.5)
    }
}

/// Uplink scheduling policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    Rr,
    RrA,
    Twus,
    TwusA,
    Dtwus,
    DtwusA,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::Rr,
        SchedulerKind::RrA,
        SchedulerKind::Twus,
        SchedulerKind::TwusA,
        SchedulerKind::Dtwus,
        SchedulerKind::DtwusA,
    ];

    /// Whether the PHY adapts the modulation per frame (`-A` variants).
    pub fn adaptive(self) -> bool {
        matches!(self, Self::RrA | Self::TwusA | Self::DtwusA)
    }

    /// Whether weights include the timeout deadline.
    pub fn uses_deadline(self) -> bool {
        matches!(self, Self::Dtwus | Self::DtwusA)
    }

    pub fn is_round_robin(self) -> bool {
        matches!(self, Self::Rr | Self::RrA)
    }

    /// Default window cap: 70 packets with adaptive modulation, 60 with QPSK only.
    pub fn default_cwnd_max(self) -> u32 {
        if self.adaptive() {
            70
        } else {
            60
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rr => "rr",
            Self::RrA => "rr-a",
            Self::Twus => "twus",
            Self::TwusA => "twus-a",
            Self::Dtwus => "dtwus",
            Self::DtwusA => "dtwus-a",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| format!("unknown scheduler `{s}` (expected one of rr, rr-a, twus, twus-a, dtwus, dtwus-a)"))
    }
}

/// Small-scale fading applied on top of path loss and shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingModel {
    /// Exponential power gain with mean `fading_mean_power`, redrawn every frame.
    Rayleigh,
    /// Power gain fixed at `fading_mean_power`.
    None,
}

/// How transmitted packets are corrupted on the air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacketErrorModel {
    /// No residual errors.
    None,
    /// Every packet sees the target BER: `p = 1 - (1 - p_b)^PL`.
    TargetBer,
    /// Bit errors follow the modulation's BER at the SNR of the frame the
    /// packet finished in; equals the target BER exactly at the threshold.
    SnrDependent,
    /// Fixed per-packet error probability.
    Fixed(f64),
}

impl fmt::Display for PacketErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::TargetBer => f.write_str("target-ber"),
            Self::SnrDependent => f.write_str("snr"),
            Self::Fixed(p) => write!(f, "fixed:{p}"),
        }
    }
}

impl FromStr for PacketErrorModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(Self::None),
            "target-ber" => Ok(Self::TargetBer),
            "snr" => Ok(Self::SnrDependent),
            other => match other.strip_prefix("fixed:") {
                Some(p) => p
                    .trim()
                    .parse::<f64>()
                    .map(Self::Fixed)
                    .map_err(|e| format!("bad fixed error probability `{p}`: {e}")),
                None => Err(format!(
                    "unknown packet error model `{other}` (none, target-ber, snr, fixed:<p>)"
                )),
            },
        }
    }
}

/// Quantum used when updating deficit counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeficitUpdate {
    /// `DC(n) = DC(n-1) + Q(n) - served(n-1)`; keeps the sum of counters constant.
    SameFrame,
    /// `DC(n) = DC(n-1) + Q(n-1) - served(n-1)`, the lagged form.
    Lagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceLayout {
    Equal,
    Unequal,
}

/// Distances (km) of the ten stations in the unequal-distance layout.
pub const UNEQUAL_DISTANCES_KM: [f64; 10] = [
    0.857, 1.071, 0.910, 1.230, 1.113, 0.956, 1.122, 0.884, 0.970, 1.216,
];

/// Modulation rates of QPSK, 16-QAM and 64-QAM over a 25 MHz channel.
pub const DEFAULT_RATES_BPS: [f64; 3] = [40e6, 80e6, 120e6];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub timing: FrameTiming,
    pub num_ss: usize,
    pub distances_km: Vec<f64>,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub shadow_block_frames: u32,
    pub fading: FadingModel,
    pub fading_mean_power: f64,
    pub noise_psd: f64,
    pub channel_bandwidth_hz: f64,
    pub target_ber: f64,
    pub modulation_rates_bps: Vec<f64>,
    pub scheduler_kind: SchedulerKind,
    pub cwnd_max: u32,
    pub packet_len_bits: u32,
    pub acks_per_packet: u32,
    pub num_frames: u64,
    pub warmup_frames: u64,
    pub num_runs: u32,
    pub rng_seed: u64,
    pub base_rtt_s: f64,
    pub rto_min_s: f64,
    pub edge_margin_db: f64,
    pub packet_errors: PacketErrorModel,
    /// Re-offer slots left idle by demand caps and rounding.
    pub redistribute_leftover: bool,
    pub deficit_update: DeficitUpdate,
}

/// The reference parameter set: 10 stations, 25 MHz, BER 1e-6, path-loss
/// exponent 4, 8 dB shadowing held for 50 frames, 40000 frames x 50 runs.
pub fn default_config(layout: DistanceLayout) -> ExperimentConfig {
    let distances_km = match layout {
        DistanceLayout::Equal => vec![1.0; 10],
        DistanceLayout::Unequal => UNEQUAL_DISTANCES_KM.to_vec(),
    };
    ExperimentConfig {
        timing: FrameTiming::default(),
        num_ss: 10,
        distances_km,
        path_loss_exponent: 4.0,
        shadowing_sigma_db: 8.0,
        shadow_block_frames: 50,
        fading: FadingModel::Rayleigh,
        fading_mean_power: 1.0,
        noise_psd: 0.35,
        channel_bandwidth_hz: 25e6,
        target_ber: 1e-6,
        modulation_rates_bps: DEFAULT_RATES_BPS.to_vec(),
        scheduler_kind: SchedulerKind::TwusA,
        cwnd_max: SchedulerKind::TwusA.default_cwnd_max(),
        packet_len_bits: 8000,
        acks_per_packet: 1,
        num_frames: 40_000,
        warmup_frames: 200,
        num_runs: 50,
        rng_seed: 1,
        base_rtt_s: 0.1,
        rto_min_s: 0.2,
        edge_margin_db: 13.4,
        packet_errors: PacketErrorModel::SnrDependent,
        redistribute_leftover: true,
        deficit_update: DeficitUpdate::SameFrame,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        default_config(DistanceLayout::Equal)
    }
}

impl ExperimentConfig {
    /// Switches the scheduler and resets `cwnd_max` to that scheduler's default.
    pub fn with_scheduler(mut self, kind: SchedulerKind) -> Self {
        self.scheduler_kind = kind;
        self.cwnd_max = kind.default_cwnd_max();
        self
    }

    /// Number of frames in the measurement window.
    pub fn measured_frames(&self) -> u64 {
        self.num_frames.saturating_sub(self.warmup_frames)
    }

    /// Base round-trip time expressed in whole frames.
    pub fn base_rtt_frames(&self) -> u64 {
        (self.base_rtt_s / self.timing.frame_duration_s).round() as u64
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        validate(self)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// Serializes every field in the file format accepted by [`FromStr`].
    pub fn to_config_string(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let t = &self.timing;
        let _ = writeln!(s, "frame_duration_s = {}", t.frame_duration_s);
        let _ = writeln!(s, "uplink_slots_per_frame = {}", t.uplink_slots_per_frame);
        let _ = writeln!(s, "uplink_fraction = {}", t.uplink_fraction);
        let _ = writeln!(s, "num_ss = {}", self.num_ss);
        let _ = writeln!(s, "distances_km = {}", join(&self.distances_km));
        let _ = writeln!(s, "path_loss_exponent = {}", self.path_loss_exponent);
        let _ = writeln!(s, "shadowing_sigma_db = {}", self.shadowing_sigma_db);
        let _ = writeln!(s, "shadow_block_frames = {}", self.shadow_block_frames);
        let fading = match self.fading {
            FadingModel::Rayleigh => "rayleigh",
            FadingModel::None => "none",
        };
        let _ = writeln!(s, "fading = {fading}");
        let _ = writeln!(s, "fading_mean_power = {}", self.fading_mean_power);
        let _ = writeln!(s, "noise_psd = {}", self.noise_psd);
        let _ = writeln!(s, "channel_bandwidth_hz = {}", self.channel_bandwidth_hz);
        let _ = writeln!(s, "target_ber = {}", self.target_ber);
        let _ = writeln!(
            s,
            "modulation_rates_bps = {}",
            join(&self.modulation_rates_bps)
        );
        let _ = writeln!(s, "scheduler_kind = {}", self.scheduler_kind);
        let _ = writeln!(s, "cwnd_max = {}", self.cwnd_max);
        let _ = writeln!(s, "packet_len_bits = {}", self.packet_len_bits);
        let _ = writeln!(s, "acks_per_packet = {}", self.acks_per_packet);
        let _ = writeln!(s, "num_frames = {}", self.num_frames);
        let _ = writeln!(s, "warmup_frames = {}", self.warmup_frames);
        let _ = writeln!(s, "num_runs = {}", self.num_runs);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        let _ = writeln!(s, "base_rtt_s = {}", self.base_rtt_s);
        let _ = writeln!(s, "rto_min_s = {}", self.rto_min_s);
        let _ = writeln!(s, "edge_margin_db = {}", self.edge_margin_db);
        let _ = writeln!(s, "packet_errors = {}", self.packet_errors);
        let _ = writeln!(s, "redistribute_leftover = {}", self.redistribute_leftover);
        let deficit = match self.deficit_update {
            DeficitUpdate::SameFrame => "same-frame",
            DeficitUpdate::Lagged => "lagged",
        };
        let _ = writeln!(s, "deficit_update = {deficit}");
        s
    }
}

/// Checks every invariant and reports the first violation.
pub fn validate(c: &ExperimentConfig) -> Result<(), ValidationError> {
    c.timing.validate()?;
    if c.num_ss < 1 {
        return Err(ValidationError::new("num_ss", "must be >= 1"));
    }
    if c.distances_km.len() != c.num_ss {
        return Err(ValidationError::new(
            "distances_km",
            format!(
                "expected {} distances, got {}",
                c.num_ss,
                c.distances_km.len()
            ),
        ));
    }
    if let Some(d) = c
        .distances_km
        .iter()
        .find(|d| !(**d > 0.0 && d.is_finite()))
    {
        return Err(ValidationError::new(
            "distances_km",
            format!("distance {d} is not > 0"),
        ));
    }
    if !(c.path_loss_exponent >= 0.0 && c.path_loss_exponent.is_finite()) {
        return Err(ValidationError::new("path_loss_exponent", "must be >= 0"));
    }
    if !(c.shadowing_sigma_db >= 0.0 && c.shadowing_sigma_db.is_finite()) {
        return Err(ValidationError::new("shadowing_sigma_db", "must be >= 0"));
    }
    if c.shadow_block_frames < 1 {
        return Err(ValidationError::new("shadow_block_frames", "must be >= 1"));
    }
    if !(c.fading_mean_power > 0.0 && c.fading_mean_power.is_finite()) {
        return Err(ValidationError::new("fading_mean_power", "must be > 0"));
    }
    if !(c.noise_psd > 0.0 && c.noise_psd.is_finite()) {
        return Err(ValidationError::new("noise_psd", "must be > 0"));
    }
    if !(c.channel_bandwidth_hz > 0.0 && c.channel_bandwidth_hz.is_finite()) {
        return Err(ValidationError::new("channel_bandwidth_hz", "must be > 0"));
    }
    if !(c.target_ber > 0.0 && c.target_ber < 1.0) {
        return Err(ValidationError::new("target_ber", "must lie in (0, 1)"));
    }
    if c.modulation_rates_bps.is_empty() {
        return Err(ValidationError::new(
            "modulation_rates_bps",
            "must not be empty",
        ));
    }
    if c.modulation_rates_bps
        .iter()
        .any(|r| !(*r > 0.0 && r.is_finite()))
    {
        return Err(ValidationError::new(
            "modulation_rates_bps",
            "rates must be > 0",
        ));
    }
    if c.cwnd_max < 1 {
        return Err(ValidationError::new("cwnd_max", "must be >= 1"));
    }
    if c.packet_len_bits < 1 {
        return Err(ValidationError::new("packet_len_bits", "must be >= 1"));
    }
    if c.acks_per_packet < 1 {
        return Err(ValidationError::new("acks_per_packet", "must be >= 1"));
    }
    if c.warmup_frames >= c.num_frames {
        return Err(ValidationError::new(
            "warmup_frames",
            format!(
                "warmup ({}) must be < num_frames ({})",
                c.warmup_frames, c.num_frames
            ),
        ));
    }
    if c.num_runs < 1 {
        return Err(ValidationError::new("num_runs", "must be >= 1"));
    }
    if !(c.base_rtt_s > 0.0 && c.base_rtt_s.is_finite()) {
        return Err(ValidationError::new("base_rtt_s", "must be > 0"));
    }
    if !(c.rto_min_s > 0.0 && c.rto_min_s.is_finite()) {
        return Err(ValidationError::new("rto_min_s", "must be > 0"));
    }
    if !c.edge_margin_db.is_finite() {
        return Err(ValidationError::new("edge_margin_db", "must be finite"));
    }
    if let PacketErrorModel::Fixed(p) = c.packet_errors {
        if !(0.0..=1.0).contains(&p) {
            return Err(ValidationError::new(
                "packet_errors",
                "fixed probability must lie in [0, 1]",
            ));
        }
    }
    Ok(())
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::ConfigParse {
        line,
        reason: format!("bad value for `{key}`: {e}"),
    })
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(line, key, s))
        .collect()
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    /// Parses a config file. Keys not present keep the equal-distance default;
    /// if `distances_km` is given without `num_ss`, the count follows the list.
    fn from_str(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut frame = c.timing.frame_duration_s;
        let mut slots = c.timing.uplink_slots_per_frame;
        let mut fraction = c.timing.uplink_fraction;
        let mut slot_duration: Option<(usize, f64)> = None;
        let mut saw_num_ss = false;
        let mut saw_distances = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigParse {
                line,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let v = value.trim();
            match key {
                "frame_duration_s" => frame = parse_value(line, key, v)?,
                "slot_duration_s" => slot_duration = Some((line, parse_value(line, key, v)?)),
                "uplink_slots_per_frame" => slots = parse_value(line, key, v)?,
                "uplink_fraction" => fraction = parse_value(line, key, v)?,
                "num_ss" => {
                    c.num_ss = parse_value(line, key, v)?;
                    saw_num_ss = true;
                }
                "distances_km" => {
                    c.distances_km = parse_list(line, key, v)?;
                    saw_distances = true;
                }
                "path_loss_exponent" => c.path_loss_exponent = parse_value(line, key, v)?,
                "shadowing_sigma_db" => c.shadowing_sigma_db = parse_value(line, key, v)?,
                "shadow_block_frames" => c.shadow_block_frames = parse_value(line, key, v)?,
                "fading" => {
                    c.fading = match v {
                        "rayleigh" => FadingModel::Rayleigh,
                        "none" => FadingModel::None,
                        other => {
                            return Err(Error::ConfigParse {
                                line,
                                reason: format!("unknown fading model `{other}` (rayleigh, none)"),
                            })
                        }
                    }
                }
                "fading_mean_power" => c.fading_mean_power = parse_value(line, key, v)?,
                "noise_psd" => c.noise_psd = parse_value(line, key, v)?,
                "channel_bandwidth_hz" => c.channel_bandwidth_hz = parse_value(line, key, v)?,
                "target_ber" => c.target_ber = parse_value(line, key, v)?,
                "modulation_rates_bps" => c.modulation_rates_bps = parse_list(line, key, v)?,
                "scheduler_kind" => c.scheduler_kind = parse_value(line, key, v)?,
                "cwnd_max" => c.cwnd_max = parse_value(line, key, v)?,
                "packet_len_bits" => c.packet_len_bits = parse_value(line, key, v)?,
                "acks_per_packet" => c.acks_per_packet = parse_value(line, key, v)?,
                "num_frames" => c.num_frames = parse_value(line, key, v)?,
                "warmup_frames" => c.warmup_frames = parse_value(line, key, v)?,
                "num_runs" => c.num_runs = parse_value(line, key, v)?,
                "rng_seed" => c.rng_seed = parse_value(line, key, v)?,
                "base_rtt_s" => c.base_rtt_s = parse_value(line, key, v)?,
                "rto_min_s" => c.rto_min_s = parse_value(line, key, v)?,
                "edge_margin_db" => c.edge_margin_db = parse_value(line, key, v)?,
                "packet_errors" => c.packet_errors = parse_value(line, key, v)?,
                "redistribute_leftover" => c.redistribute_leftover = parse_value(line, key, v)?,
                "deficit_update" => {
                    c.deficit_update = match v {
                        "same-frame" => DeficitUpdate::SameFrame,
                        "lagged" => DeficitUpdate::Lagged,
                        other => {
                            return Err(Error::ConfigParse {
                                line,
                                reason: format!(
                                    "unknown deficit update `{other}` (same-frame, lagged)"
                                ),
                            })
                        }
                    }
                }
                other => {
                    return Err(Error::ConfigParse {
                        line,
                        reason: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        c.timing = FrameTiming::new(frame, slots, fraction);
        if let Some((line, ts)) = slot_duration {
            let derived = c.timing.slot_duration_s;
            if (ts - derived).abs() > 1e-9 * derived {
                return Err(Error::ConfigParse {
                    line,
                    reason: format!("slot_duration_s {ts} disagrees with derived value {derived}"),
                });
            }
        }
        if saw_distances && !saw_num_ss {
            c.num_ss = c.distances_km.len();
        } else if saw_num_ss && !saw_distances && c.distances_km.len() != c.num_ss {
            c.distances_km = vec![1.0; c.num_ss];
        }
        Ok(c)
    }
}
