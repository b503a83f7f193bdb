//! Flat key/value configuration files (TOML syntax).
//!
//! Simulation file (`simulate`, `sweep`):
//!
//! ```toml
//! snr_db = [-4.0, -2.0, 0.0]     # required
//! k = 12
//! num_copies = 20
//! num_realizations = 2000
//! seed = 1
//! channel = "iid"                # iid | fully_correlated | etu
//! phase_noise = true
//! estimators = ["proposed", "traditional", "ideal"]
//! r0_init = ["identity"]         # identity | ideal_model; sweep accepts both
//! # etu only, each optional:
//! # etu_delays_ns, etu_powers_db, subcarrier_spacing_hz, subcarrier_indices
//! ```
//!
//! Waveform file (`validate-waveform`):
//!
//! ```toml
//! fft_size = 128
//! residual_fo = 0.02
//! phase_noise_std = 0.005
//! trials = 10000
//! seed = 0
//! # initial_phase, active_subcarriers
//! ```

use serde::{Deserialize, Serialize};

use crate::channel::{
    ChannelModelSpec, EtuProfile, ETU_DELAYS_NS, ETU_POWERS_DB, SUBCARRIER_SPACING_HZ,
};
use crate::estimator::EstimatorKind;
use crate::montecarlo::{R0Init, SimConfig};
use crate::waveform::{middle_subcarriers, WaveformConfig, DEFAULT_FFT_SIZE};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Iid,
    FullyCorrelated,
    Etu,
}

fn default_k() -> usize {
    12
}
fn default_copies() -> usize {
    20
}
fn default_realizations() -> usize {
    2000
}
fn default_true() -> bool {
    true
}
fn default_estimators() -> Vec<EstimatorKind> {
    EstimatorKind::ALL.to_vec()
}
fn default_r0() -> Vec<R0Init> {
    vec![R0Init::Identity]
}
fn default_channel() -> ChannelKind {
    ChannelKind::Iid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    pub snr_db: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_copies")]
    pub num_copies: usize,
    #[serde(default = "default_realizations")]
    pub num_realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_channel")]
    pub channel: ChannelKind,
    #[serde(default = "default_true")]
    pub phase_noise: bool,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_r0")]
    pub r0_init: Vec<R0Init>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etu_delays_ns: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etu_powers_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcarrier_spacing_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcarrier_indices: Option<Vec<i64>>,
}

impl SimFile {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("simulation config serializes")
    }

    pub fn channel_spec(&self) -> ChannelModelSpec {
        match self.channel {
            ChannelKind::Iid => ChannelModelSpec::IidFlat,
            ChannelKind::FullyCorrelated => ChannelModelSpec::FullyCorrelated,
            ChannelKind::Etu => ChannelModelSpec::EtuProfile(EtuProfile {
                tap_delays_s: self
                    .etu_delays_ns
                    .clone()
                    .unwrap_or_else(|| ETU_DELAYS_NS.to_vec())
                    .into_iter()
                    .map(|d| d * 1e-9)
                    .collect(),
                tap_powers_db: self
                    .etu_powers_db
                    .clone()
                    .unwrap_or_else(|| ETU_POWERS_DB.to_vec()),
                subcarrier_spacing_hz: self.subcarrier_spacing_hz.unwrap_or(SUBCARRIER_SPACING_HZ),
                subcarrier_indices: self
                    .subcarrier_indices
                    .clone()
                    .unwrap_or_else(|| (0..self.k as i64).collect()),
            }),
        }
    }

    /// The experiment for one prior-correlation mode.
    pub fn sim_config(&self, r0_init: R0Init) -> Result<SimConfig> {
        let cfg = SimConfig {
            snr_db: self.snr_db.clone(),
            k: self.k,
            num_copies: self.num_copies,
            num_realizations: self.num_realizations,
            seed: self.seed,
            channel: self.channel_spec(),
            phase_noise: self.phase_noise,
            estimators: self.estimators.clone(),
            r0_init,
        };
        cfg.validate()?;
        crate::channel::build_correlation(&cfg.channel, cfg.k)?;
        Ok(cfg)
    }
}

fn default_fft_size() -> usize {
    DEFAULT_FFT_SIZE
}
fn default_trials() -> usize {
    10_000
}
fn default_active() -> Vec<i64> {
    middle_subcarriers(12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformFile {
    #[serde(default = "default_fft_size")]
    pub fft_size: usize,
    #[serde(default = "default_active")]
    pub active_subcarriers: Vec<i64>,
    #[serde(default)]
    pub residual_fo: f64,
    #[serde(default)]
    pub phase_noise_std: f64,
    #[serde(default)]
    pub initial_phase: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl WaveformFile {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("waveform config serializes")
    }

    pub fn waveform_config(&self) -> Result<WaveformConfig> {
        let cfg = WaveformConfig {
            fft_size: self.fft_size,
            active_subcarriers: self.active_subcarriers.clone(),
            residual_fo: self.residual_fo,
            phase_noise_std: self.phase_noise_std,
            initial_phase: self.initial_phase,
            noise_var: None,
        };
        cfg.validate()?;
        if self.trials == 0 {
            return Err(crate::error::invalid("trials", "must be at least 1"));
        }
        Ok(cfg)
    }
}
