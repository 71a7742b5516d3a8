//! Direction-of-arrival estimation by steering GCC-PHAT over an azimuth grid.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::DspError;
use crate::scene::{delays_for_azimuth, ArrayGeometry};

/// Outcome of a DoA estimate on one multichannel frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DoaEstimate {
    Source { azimuth_deg: f64, confidence: f64 },
    NoSource,
}

impl DoaEstimate {
    pub fn azimuth(&self) -> Option<f64> {
        match self {
            DoaEstimate::Source { azimuth_deg, .. } => Some(*azimuth_deg),
            DoaEstimate::NoSource => None,
        }
    }
}

/// PHAT-weighted cross spectra of one channel pair.
struct PairSpectrum {
    i: usize,
    j: usize,
    /// `X_i conj(X_j) / |X_i conj(X_j)|` for bins `0..=nfft/2`, zero where the
    /// cross power vanishes.
    phat: Vec<Complex64>,
    active_weight: f64,
}

fn spectra(channels: &[&[f64]], nfft: usize) -> Vec<Vec<Complex64>> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    channels
        .iter()
        .map(|x| {
            let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            buf.resize(nfft, Complex64::new(0.0, 0.0));
            fft.process(&mut buf);
            buf.truncate(nfft / 2 + 1);
            buf
        })
        .collect()
}

fn bin_weight(k: usize, nfft: usize) -> f64 {
    if k == 0 || k == nfft / 2 {
        1.0
    } else {
        2.0
    }
}

fn pair_spectra(specs: &[Vec<Complex64>], nfft: usize) -> Vec<PairSpectrum> {
    let mut out = Vec::new();
    for i in 0..specs.len() {
        for j in i + 1..specs.len() {
            let mut active_weight = 0.0;
            let phat = specs[i]
                .iter()
                .zip(&specs[j])
                .enumerate()
                .map(|(k, (a, b))| {
                    let c = a * b.conj();
                    let m = c.norm();
                    if m > 1e-30 {
                        active_weight += bin_weight(k, nfft);
                        c / m
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            out.push(PairSpectrum {
                i,
                j,
                phat,
                active_weight,
            });
        }
    }
    out
}

/// Normalised GCC-PHAT value at a (fractional) lag in samples, in `[-1, 1]`.
/// The correlation peaks at `lag = d_i - d_j` when channel `i` lags channel
/// `j` by that many samples.
fn gcc_at(pair: &PairSpectrum, lag: f64, nfft: usize) -> f64 {
    if pair.active_weight == 0.0 {
        return 0.0;
    }
    let step = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * lag / nfft as f64);
    let mut rot = Complex64::new(1.0, 0.0);
    let mut acc = 0.0;
    for (k, g) in pair.phat.iter().enumerate() {
        acc += bin_weight(k, nfft) * (g * rot).re;
        rot *= step;
        // Renormalise occasionally to keep the phasor on the unit circle.
        if k % 1024 == 1023 {
            rot /= rot.norm();
        }
    }
    acc / pair.active_weight
}

/// Steered response power of every grid azimuth: the sum over pairs of
/// `(1 + gcc(tau_ij(az))) / 2`, so each pair contributes a value in `[0, 1]`.
pub fn steered_response(
    channels: &[&[f64]],
    geometry: &ArrayGeometry,
    grid_resolution_deg: f64,
    sample_rate: u32,
) -> Result<Vec<(f64, f64)>, DspError> {
    validate(channels, geometry, sample_rate)?;
    let len = channels[0].len();
    let nfft = (2 * len).next_power_of_two();
    let specs = spectra(channels, nfft);
    let pairs = pair_spectra(&specs, nfft);
    let fs = sample_rate as f64;
    Ok(grid(grid_resolution_deg)
        .map(|az| {
            let d = delays_for_azimuth(geometry, az);
            let p: f64 = pairs
                .iter()
                .map(|pr| 0.5 * (1.0 + gcc_at(pr, (d[pr.i] - d[pr.j]) * fs, nfft)))
                .sum();
            (az, p)
        })
        .collect())
}

fn grid(res: f64) -> impl Iterator<Item = f64> {
    let n = (360.0 / res).round().max(1.0) as usize;
    (0..n).map(move |i| i as f64 * 360.0 / n as f64)
}

fn validate(
    channels: &[&[f64]],
    geometry: &ArrayGeometry,
    sample_rate: u32,
) -> Result<(), DspError> {
    if channels.len() < 2 {
        return Err(DspError::TooFewChannels {
            needed: 2,
            found: channels.len(),
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
    let max_delay = geometry.aperture() / geometry.speed_of_sound * sample_rate as f64;
    let needed = (2.0 * max_delay).ceil().max(2.0) as usize;
    if len < needed {
        return Err(DspError::FrameTooShort { len, needed });
    }
    Ok(())
}

/// Azimuth maximising the steered GCC-PHAT response; confidence is the peak
/// divided by the mean response over the grid. All-zero input yields
/// [`DoaEstimate::NoSource`].
pub fn estimate_doa(
    channels: &[&[f64]],
    geometry: &ArrayGeometry,
    grid_resolution_deg: f64,
    sample_rate: u32,
) -> Result<DoaEstimate, DspError> {
    if !(grid_resolution_deg > 0.0) {
        return Err(DspError::InvalidConfig(
            "grid resolution must be positive".into(),
        ));
    }
    validate(channels, geometry, sample_rate)?;
    if channels.iter().all(|c| c.iter().all(|v| *v == 0.0)) {
        return Ok(DoaEstimate::NoSource);
    }
    let resp = steered_response(channels, geometry, grid_resolution_deg, sample_rate)?;
    let mean = resp.iter().map(|r| r.1).sum::<f64>() / resp.len() as f64;
    let (az, peak) = resp
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |best, r| {
            if r.1 > best.1 {
                r
            } else {
                best
            }
        });
    if mean <= 0.0 {
        return Ok(DoaEstimate::NoSource);
    }
    Ok(DoaEstimate::Source {
        azimuth_deg: az,
        confidence: peak / mean,
    })
}

/// Integer lag maximising the GCC-PHAT between `a` and `b` within
/// `±max_lag`: a positive lag means `a` is a delayed copy of `b`.
pub fn gcc_phat_lag(a: &[f64], b: &[f64], max_lag: usize) -> Result<i64, DspError> {
    if a.len() != b.len() {
        return Err(DspError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let nfft = (2 * a.len()).next_power_of_two();
    let specs = spectra(&[a, b], nfft);
    let pair = &pair_spectra(&specs, nfft)[0];
    let mut full: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); nfft];
    full[..=nfft / 2].copy_from_slice(&pair.phat);
    for k in 1..nfft / 2 {
        full[nfft - k] = pair.phat[k].conj();
    }
    FftPlanner::<f64>::new()
        .plan_fft_inverse(nfft)
        .process(&mut full);
    let max_lag = max_lag.min(a.len() - 1) as i64;
    let mut best = (0i64, f64::NEG_INFINITY);
    for lag in -max_lag..=max_lag {
        let v = full[lag.rem_euclid(nfft as i64) as usize].re;
        if v > best.1 {
            best = (lag, v);
        }
    }
    Ok(best.0)
}
