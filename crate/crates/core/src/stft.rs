//! Short-time Fourier analysis with a periodic Hann window and weighted
//! overlap-add resynthesis.
//!
//! Frames start at multiples of `hop` with no implicit padding, so a signal of
//! `N` samples yields `floor((N - window) / hop) + 1` frames. Callers that need
//! full coverage of the edges use [`stft_padded`] / [`istft_cropped`], which pad
//! `window` zeros on both sides and crop them again after synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::StftError;

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_HOP: usize = 128;

/// Complex one-sided spectra of consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    /// Energy of the windowed frames, recovered from the one-sided spectra by
    /// Parseval's relation.
    pub fn windowed_energy(&self) -> f64 {
        let n = self.window_size;
        let last = n / 2;
        self.frames
            .iter()
            .map(|f| {
                f.iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let w = if k == 0 || k == last { 1.0 } else { 2.0 };
                        w * c.norm_sqr()
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .sum()
    }

    fn validate(&self) -> Result<(), StftError> {
        check_params(self.window_size, self.hop)?;
        if self.frames.is_empty() {
            return Err(StftError::Empty);
        }
        let expected = self.num_bins();
        for (i, f) in self.frames.iter().enumerate() {
            if f.len() != expected {
                return Err(StftError::InconsistentFrame {
                    frame: i,
                    found: f.len(),
                    expected,
                });
            }
        }
        Ok(())
    }
}

/// Periodic Hann window `0.5 - 0.5 cos(2 pi n / N)`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn check_params(window: usize, hop: usize) -> Result<(), StftError> {
    if window == 0 || !window.is_power_of_two() {
        return Err(StftError::WindowNotPowerOfTwo(window));
    }
    if hop == 0 || window % hop != 0 {
        return Err(StftError::BadHop { window, hop });
    }
    Ok(())
}

/// Forward STFT of a mono signal.
pub fn stft(
    signal: &[f64],
    window_size: usize,
    hop: usize,
    sample_rate: u32,
) -> Result<Spectrogram, StftError> {
    check_params(window_size, hop)?;
    if signal.len() < window_size {
        return Err(StftError::SignalTooShort {
            len: signal.len(),
            window: window_size,
        });
    }
    let n_frames = (signal.len() - window_size) / hop + 1;
    let win = hann(window_size);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_size);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_size];
    let frames = (0..n_frames)
        .map(|t| {
            let start = t * hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(signal[start + i] * win[i], 0.0);
            }
            fft.process(&mut buf);
            buf[..window_size / 2 + 1].to_vec()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        window_size,
        hop,
        sample_rate,
    })
}

/// Inverse STFT by weighted overlap-add: each frame is resynthesised with the
/// analysis window and the sum is divided by the accumulated squared window.
/// Output length is `(frames - 1) * hop + window_size`.
pub fn istft(spec: &Spectrogram) -> Result<Vec<f64>, StftError> {
    spec.validate()?;
    let n = spec.window_size;
    let out_len = (spec.num_frames() - 1) * spec.hop + n;
    let win = hann(n);
    let ifft: Arc<dyn Fft<f64>> = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (t, frame) in spec.frames.iter().enumerate() {
        buf[..=n / 2].copy_from_slice(frame);
        for k in 1..n / 2 {
            buf[n - k] = frame[k].conj();
        }
        // Hermitian symmetry requires real DC and Nyquist bins.
        buf[0].im = 0.0;
        buf[n / 2].im = 0.0;
        ifft.process(&mut buf);
        let start = t * spec.hop;
        for i in 0..n {
            out[start + i] += buf[i].re / n as f64 * win[i];
            norm[start + i] += win[i] * win[i];
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        if *w > 1e-12 {
            *o /= w;
        } else {
            *o = 0.0;
        }
    }
    Ok(out)
}

/// STFT of `signal` padded with `window_size` zeros at the front and enough
/// zeros at the back to cover every sample with a full set of frames.
pub fn stft_padded(
    signal: &[f64],
    window_size: usize,
    hop: usize,
    sample_rate: u32,
) -> Result<Spectrogram, StftError> {
    check_params(window_size, hop)?;
    let body = signal.len() + window_size;
    let tail = window_size + (hop - body % hop) % hop;
    let mut padded = vec![0.0; window_size];
    padded.extend_from_slice(signal);
    padded.resize(body + tail, 0.0);
    stft(&padded, window_size, hop, sample_rate)
}

/// Inverse of [`stft_padded`], cropped back to `len` samples.
pub fn istft_cropped(spec: &Spectrogram, len: usize) -> Result<Vec<f64>, StftError> {
    let full = istft(spec)?;
    let start = spec.window_size;
    let mut out: Vec<f64> = full.into_iter().skip(start).take(len).collect();
    out.resize(len, 0.0);
    Ok(out)
}
