//! Delay-and-sum beamforming.

use crate::error::DspError;
use crate::scene::{delays_for_azimuth, fractional_delay_range, ArrayGeometry};

/// Steers the array toward `azimuth_deg`: every channel is advanced by its
/// plane-wave delay and the aligned channels are averaged.
pub fn beamform_das(
    channels: &[&[f64]],
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    sample_rate: u32,
) -> Result<Vec<f64>, DspError> {
    let len = channels.first().map(|c| c.len()).unwrap_or(0);
    beamform_range(channels, geometry, azimuth_deg, sample_rate, 0, len)
}

/// Beamformed output for samples `start..end` only, using the full channels
/// as filter context. The pipeline steers block by block with this.
pub fn beamform_range(
    channels: &[&[f64]],
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    sample_rate: u32,
    start: usize,
    end: usize,
) -> Result<Vec<f64>, DspError> {
    if channels.is_empty() {
        return Err(DspError::TooFewChannels {
            needed: 1,
            found: 0,
        });
    }
    if channels.len() != geometry.num_mics() {
        return Err(DspError::GeometryMismatch {
            channels: channels.len(),
            mics: geometry.num_mics(),
        });
    }
    let len = channels[0].len();
    if let Some(c) = channels.iter().find(|c| c.len() != len) {
        return Err(DspError::LengthMismatch { a: len, b: c.len() });
    }
    if !azimuth_deg.is_finite() {
        return Err(DspError::NonFinite("azimuth"));
    }
    let delays = delays_for_azimuth(geometry, azimuth_deg);
    let fs = sample_rate as f64;
    let scale = 1.0 / channels.len() as f64;
    let mut out = vec![0.0; end - start];
    for (ch, d) in channels.iter().zip(&delays) {
        let aligned = fractional_delay_range(ch, -d * fs, start, end);
        for (o, v) in out.iter_mut().zip(aligned) {
            *o += v * scale;
        }
    }
    Ok(out)
}
