//! The full front-end chain producing the six-channel bundle.
//!
//! Channel 0 carries the processed voice feed (AEC per mic when a reference
//! is present, multichannel WPE, DoA-steered delay-and-sum, spectral
//! subtraction),
//! channels 1-4 the raw microphones and channel 5 their average.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::aec::{aec_nlms, AecState};
use super::beamform::beamform_range;
use super::dereverb::dereverberate_multichannel;
use super::doa::{estimate_doa, DoaEstimate};
use super::noise::{estimate_noise, suppress_noise};
use super::DspConfig;
use crate::audio::AudioBuffer;
use crate::error::DspError;
use crate::scene::ArrayGeometry;
use crate::stft::{istft_cropped, stft_padded};

pub const BUNDLE_CHANNELS: usize = 6;
pub const RAW_MICS: usize = 4;

/// One entry of the per-block DoA track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaFrame {
    pub frame_index: usize,
    /// `None` when the block had no source.
    pub azimuth_deg: Option<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBundle {
    pub sample_rate: u32,
    /// ch0: fully processed mono feed.
    pub processed: Vec<f64>,
    /// ch1..ch4: raw microphones.
    pub raw: Vec<Vec<f64>>,
    /// ch5: mean of the raw microphones.
    pub mix: Vec<f64>,
    pub doa_track: Vec<DoaFrame>,
    /// Samples per DoA track entry.
    pub doa_block: usize,
    pub aec_engaged: bool,
}

impl ChannelBundle {
    pub fn len(&self) -> usize {
        self.processed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processed.is_empty()
    }

    /// All six channels as one buffer, ch0 first.
    pub fn to_buffer(&self) -> Result<AudioBuffer, DspError> {
        let mut channels = Vec::with_capacity(BUNDLE_CHANNELS);
        channels.push(self.processed.clone());
        channels.extend(self.raw.iter().cloned());
        channels.push(self.mix.clone());
        Ok(AudioBuffer::from_channels(channels, self.sample_rate)?)
    }

    pub fn channel0(&self) -> Result<AudioBuffer, DspError> {
        Ok(AudioBuffer::mono(self.processed.clone(), self.sample_rate)?)
    }

    /// DoA track as JSON lines: `{"frame_index":..,"azimuth_deg":..,"confidence":..}`.
    pub fn doa_track_jsonl(&self) -> String {
        let mut s = String::new();
        for f in &self.doa_track {
            let _ = writeln!(
                s,
                "{}",
                serde_json::to_string(f).expect("DoaFrame serialises")
            );
        }
        s
    }

    /// Latest azimuth estimate at or before `sample`.
    pub fn azimuth_at(&self, sample: usize) -> Option<f64> {
        let idx = (sample / self.doa_block.max(1)).min(self.doa_track.len().saturating_sub(1));
        self.doa_track[..=idx]
            .iter()
            .rev()
            .find_map(|f| f.azimuth_deg)
    }
}

pub fn process_pipeline(
    mics: &AudioBuffer,
    geometry: &ArrayGeometry,
    echo_reference: Option<&AudioBuffer>,
    config: &DspConfig,
) -> Result<ChannelBundle, DspError> {
    config.validate()?;
    mics.require_canonical()?;
    if mics.num_channels() != RAW_MICS {
        return Err(DspError::TooFewChannels {
            needed: RAW_MICS,
            found: mics.num_channels(),
        });
    }
    if geometry.num_mics() != RAW_MICS {
        return Err(DspError::GeometryMismatch {
            channels: RAW_MICS,
            mics: geometry.num_mics(),
        });
    }
    let fs = mics.sample_rate();
    let len = mics.len();

    let (front, aec_engaged): (Vec<Vec<f64>>, bool) = match echo_reference {
        Some(r) => {
            r.require_canonical()?;
            if r.len() != len {
                return Err(DspError::LengthMismatch { a: len, b: r.len() });
            }
            let chans = mics
                .channels()
                .iter()
                .map(|ch| {
                    let state = AecState::new(
                        config.aec_taps,
                        config.aec_step_size,
                        config.aec_regularization,
                    )?;
                    aec_nlms(ch, r.channel(0), state).map(|(e, _)| e)
                })
                .collect::<Result<_, _>>()?;
            (chans, true)
        }
        None => (mics.channels().to_vec(), false),
    };
    // De-reverberate before combining: predicting each mic from the past of
    // all four removes far more of the tail than predicting the beam output.
    let front = if config.enable_dereverb {
        dereverberate_channels(&front, fs, config)?
    } else {
        front
    };
    let refs: Vec<&[f64]> = front.iter().map(|c| c.as_slice()).collect();

    let block = config.doa_block;
    let n_blocks = len.div_ceil(block).max(1);
    let mut doa_track = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let start = b * block;
        let end = ((b + 1) * block).min(len);
        let slices: Vec<&[f64]> = refs.iter().map(|c| &c[start..end]).collect();
        let est = match estimate_doa(&slices, geometry, config.doa_grid_deg, fs) {
            Ok(e) => e,
            Err(DspError::FrameTooShort { .. }) => DoaEstimate::NoSource,
            Err(e) => return Err(e),
        };
        doa_track.push(match est {
            DoaEstimate::Source {
                azimuth_deg,
                confidence,
            } => DoaFrame {
                frame_index: b,
                azimuth_deg: Some(azimuth_deg),
                confidence,
            },
            DoaEstimate::NoSource => DoaFrame {
                frame_index: b,
                azimuth_deg: None,
                confidence: 0.0,
            },
        });
    }

    // Steer each block at its estimate, holding the previous one through
    // blocks without a source; leading empty blocks use the first estimate.
    let first = doa_track.iter().find_map(|f| f.azimuth_deg).unwrap_or(0.0);
    let mut steer = first;
    let mut beam = Vec::with_capacity(len);
    for f in &doa_track {
        if let Some(az) = f.azimuth_deg {
            steer = az;
        }
        let start = f.frame_index * block;
        let end = ((f.frame_index + 1) * block).min(len);
        beam.extend(beamform_range(&refs, geometry, steer, fs, start, end)?);
    }

    let processed = enhance(&beam, fs, config)?;

    let mix: Vec<f64> = (0..len)
        .map(|i| mics.channels().iter().map(|c| c[i]).sum::<f64>() / RAW_MICS as f64)
        .collect();

    Ok(ChannelBundle {
        sample_rate: fs,
        processed,
        raw: mics.channels().to_vec(),
        mix,
        doa_track,
        doa_block: block,
        aec_engaged,
    })
}

/// Multichannel WPE over time-domain channels; returns them unchanged when
/// there are too few frames.
pub fn dereverberate_channels(
    channels: &[Vec<f64>],
    sample_rate: u32,
    config: &DspConfig,
) -> Result<Vec<Vec<f64>>, DspError> {
    let specs = channels
        .iter()
        .map(|c| stft_padded(c, config.window_size, config.hop, sample_rate))
        .collect::<Result<Vec<_>, _>>()?;
    if specs.first().map_or(true, |s| {
        s.num_frames() <= config.wpe_delay + config.wpe_taps
    }) {
        return Ok(channels.to_vec());
    }
    let cleaned = dereverberate_multichannel(
        &specs,
        config.wpe_delay,
        config.wpe_taps,
        config.wpe_iterations,
    )?;
    cleaned
        .iter()
        .zip(channels)
        .map(|(s, c)| Ok(istft_cropped(s, c.len())?))
        .collect()
}

/// Noise suppression on a mono signal; skipped when the signal is too short
/// to seed the noise estimate.
pub fn enhance(signal: &[f64], sample_rate: u32, config: &DspConfig) -> Result<Vec<f64>, DspError> {
    if !config.enable_noise_suppression {
        return Ok(signal.to_vec());
    }
    let mut spec = stft_padded(signal, config.window_size, config.hop, sample_rate)?;
    if config.enable_noise_suppression && spec.num_frames() >= config.noise_initial_frames {
        let noise = estimate_noise(
            &spec,
            config.noise_initial_frames,
            config.noise_window_frames(sample_rate),
        )?;
        spec = suppress_noise(&spec, &noise, config.oversubtraction, config.spectral_floor)?;
    }
    Ok(istft_cropped(&spec, signal.len())?)
}
