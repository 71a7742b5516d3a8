//! Microphone-array front-end: DoA, beamforming, echo cancellation, noise
//! suppression, de-reverberation and the six-channel output bundle.

pub mod aec;
pub mod beamform;
pub mod dereverb;
pub mod doa;
pub mod noise;
pub mod pipeline;

pub use aec::{aec_nlms, erle_db, AecState};
pub use beamform::{beamform_das, beamform_range};
pub use dereverb::{dereverberate, dereverberate_multichannel};
pub use doa::{estimate_doa, gcc_phat_lag, steered_response, DoaEstimate};
pub use noise::{estimate_noise, suppress_noise, NoiseEstimate};
pub use pipeline::{process_pipeline, ChannelBundle, DoaFrame};

use serde::{Deserialize, Serialize};

use crate::error::DspError;

/// Front-end parameters. Defaults: Hann 512/128 STFT, NLMS with 1024 taps,
/// mu 0.5 and eps 1e-6, spectral subtraction alpha 2 and floor 0.01 over a
/// 1.5 s minimum-statistics window, multichannel WPE with delay 2 and 10 taps
/// over two iterations, 5 degree DoA grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    pub window_size: usize,
    pub hop: usize,
    pub aec_taps: usize,
    pub aec_step_size: f64,
    pub aec_regularization: f64,
    pub oversubtraction: f64,
    pub spectral_floor: f64,
    pub noise_window_s: f64,
    pub noise_initial_frames: usize,
    pub wpe_delay: usize,
    pub wpe_taps: usize,
    pub wpe_iterations: usize,
    pub doa_grid_deg: f64,
    /// Samples per DoA/beamforming block.
    pub doa_block: usize,
    pub enable_dereverb: bool,
    pub enable_noise_suppression: bool,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            window_size: crate::stft::DEFAULT_WINDOW,
            hop: crate::stft::DEFAULT_HOP,
            aec_taps: 1024,
            aec_step_size: 0.5,
            aec_regularization: 1e-6,
            oversubtraction: 2.0,
            spectral_floor: 0.01,
            noise_window_s: 1.5,
            noise_initial_frames: 10,
            wpe_delay: 2,
            wpe_taps: 10,
            wpe_iterations: 2,
            doa_grid_deg: 5.0,
            doa_block: 4096,
            enable_dereverb: true,
            enable_noise_suppression: true,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |m: &str| Err(DspError::InvalidConfig(m.to_string()));
        if !self.window_size.is_power_of_two() || self.hop == 0 || self.window_size % self.hop != 0
        {
            return bad("window_size must be a power of two divisible by hop");
        }
        if self.aec_taps == 0
            || !(self.aec_step_size > 0.0 && self.aec_step_size < 2.0)
            || !(self.aec_regularization > 0.0)
        {
            return bad("AEC parameters out of range");
        }
        if !(self.oversubtraction > 0.0)
            || !(self.spectral_floor > 0.0 && self.spectral_floor < 1.0)
        {
            return bad("oversubtraction must be positive and spectral_floor in (0, 1)");
        }
        if !(self.noise_window_s > 0.0) || self.noise_initial_frames < 5 {
            return bad("noise window must be positive and initial frames >= 5");
        }
        if self.wpe_delay == 0 || self.wpe_taps == 0 || self.wpe_iterations == 0 {
            return bad("WPE delay, taps and iterations must be positive");
        }
        if !(self.doa_grid_deg > 0.0) || self.doa_block < 64 {
            return bad("DoA grid must be positive and block >= 64 samples");
        }
        Ok(())
    }

    pub fn noise_window_frames(&self, sample_rate: u32) -> usize {
        ((self.noise_window_s * sample_rate as f64) / self.hop as f64)
            .round()
            .max(1.0) as usize
    }
}
