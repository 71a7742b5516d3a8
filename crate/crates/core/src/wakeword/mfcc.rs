//! MFCC front-end: Hamming-windowed power spectrum, HTK mel filterbank,
//! natural-log energies with a floor, orthonormal DCT-II.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::WakeError;

/// Mel energies below this are clamped before the log, so silence maps to a
/// constant vector instead of `-inf`.
pub const LOG_FLOOR: f64 = 1e-10;

/// One row per analysis frame, `n_coeffs` columns.
pub type MfccMatrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub window_s: f64,
    pub hop_s: f64,
    pub n_mels: usize,
    pub fmin_hz: f64,
    /// Upper filterbank edge. The default of 4 kHz covers the voice band and
    /// leaves anything in the upper half of a 16 kHz stream unseen.
    pub fmax_hz: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_coeffs: 13,
            window_s: 0.025,
            hop_s: 0.010,
            n_mels: 26,
            fmin_hz: 20.0,
            fmax_hz: 4000.0,
        }
    }
}

impl MfccConfig {
    pub fn window_len(&self, sample_rate: u32) -> usize {
        (self.window_s * sample_rate as f64).round() as usize
    }

    pub fn hop_len(&self, sample_rate: u32) -> usize {
        (self.hop_s * sample_rate as f64).round() as usize
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), WakeError> {
        let bad = |m: String| Err(WakeError::InvalidConfig(m));
        if self.n_mels == 0 || self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return bad(format!(
                "need 0 < n_coeffs ({}) <= n_mels ({})",
                self.n_coeffs, self.n_mels
            ));
        }
        if self.window_len(sample_rate) < 2 || self.hop_len(sample_rate) == 0 {
            return bad("window must span at least 2 samples and hop at least 1".into());
        }
        if !(self.fmin_hz >= 0.0
            && self.fmin_hz < self.fmax_hz
            && self.fmax_hz <= sample_rate as f64 / 2.0)
        {
            return bad(format!(
                "need 0 <= fmin < fmax <= {} Hz",
                sample_rate as f64 / 2.0
            ));
        }
        Ok(())
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular band with its first bin and weights.
#[derive(Debug, Clone)]
struct Band {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Reusable extractor with the window, filterbank and FFT plan prepared.
#[derive(Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    sample_rate: u32,
    window: Vec<f64>,
    hop: usize,
    fft: Arc<dyn Fft<f64>>,
    bands: Vec<Band>,
    dct: Vec<Vec<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("config", &self.config)
            .field("sample_rate", &self.sample_rate)
            .finish()
    }
}

impl MfccExtractor {
    pub fn new(config: &MfccConfig, sample_rate: u32) -> Result<Self, WakeError> {
        config.validate(sample_rate)?;
        let n = config.window_len(sample_rate);
        let window: Vec<f64> = (0..n)
            .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
            .collect();
        let nfft = n.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        let fs = sample_rate as f64;
        let (lo, hi) = (hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz));
        let edges: Vec<f64> = (0..config.n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_mels + 1) as f64))
            .collect();
        let bands = (0..config.n_mels)
            .map(|m| {
                let (l, c, r) = (edges[m], edges[m + 1], edges[m + 2]);
                let mut first_bin = None;
                let mut weights = Vec::new();
                for k in 0..=nfft / 2 {
                    let f = k as f64 * fs / nfft as f64;
                    let w = if f >= l && f <= c && c > l {
                        (f - l) / (c - l)
                    } else if f > c && f <= r && r > c {
                        (r - f) / (r - c)
                    } else {
                        0.0
                    };
                    if w > 0.0 || (first_bin.is_some() && f <= r) {
                        first_bin.get_or_insert(k);
                        weights.push(w);
                    }
                }
                Band {
                    first_bin: first_bin.unwrap_or(0),
                    weights,
                }
            })
            .collect();
        let m = config.n_mels as f64;
        let dct = (0..config.n_coeffs)
            .map(|q| {
                let scale = if q == 0 {
                    (1.0 / m).sqrt()
                } else {
                    (2.0 / m).sqrt()
                };
                (0..config.n_mels)
                    .map(|j| scale * (PI * q as f64 * (j as f64 + 0.5) / m).cos())
                    .collect()
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            sample_rate,
            window,
            hop: config.hop_len(sample_rate),
            fft,
            bands,
            dct,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// `1 + (len - window) / hop` frames; error below one window.
    pub fn num_frames(&self, len: usize) -> Result<usize, WakeError> {
        if len < self.window.len() {
            return Err(WakeError::SignalTooShort {
                len,
                window: self.window.len(),
            });
        }
        Ok(1 + (len - self.window.len()) / self.hop)
    }

    pub fn extract(&self, samples: &[f64]) -> Result<MfccMatrix, WakeError> {
        let frames = self.num_frames(samples.len())?;
        let nfft = self.fft.len();
        let mut buf = vec![Complex64::default(); nfft];
        let mut scratch = vec![Complex64::default(); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; nfft / 2 + 1];
        let mut logmel = vec![0.0; self.bands.len()];
        let mut out = Vec::with_capacity(frames);
        for t in 0..frames {
            let seg = &samples[t * self.hop..t * self.hop + self.window.len()];
            for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(&self.window)) {
                *b = Complex64::new(x * w, 0.0);
            }
            for b in buf[self.window.len()..].iter_mut() {
                *b = Complex64::default();
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            for (lm, band) in logmel.iter_mut().zip(&self.bands) {
                let e: f64 = band
                    .weights
                    .iter()
                    .zip(&power[band.first_bin..])
                    .map(|(w, p)| w * p)
                    .sum();
                *lm = e.max(LOG_FLOOR).ln();
            }
            out.push(
                self.dct
                    .iter()
                    .map(|row| row.iter().zip(&logmel).map(|(a, b)| a * b).sum())
                    .collect(),
            );
        }
        Ok(out)
    }
}

/// MFCCs of a mono buffer at the canonical rate.
pub fn extract_mfcc(buffer: &AudioBuffer, config: &MfccConfig) -> Result<MfccMatrix, WakeError> {
    buffer.require_canonical()?;
    if buffer.num_channels() != 1 {
        return Err(WakeError::InvalidConfig(format!(
            "expected mono audio, got {} channels",
            buffer.num_channels()
        )));
    }
    MfccExtractor::new(config, buffer.sample_rate())?.extract(buffer.channel(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, Variation, WordPattern};

    fn mono(x: Vec<f64>) -> AudioBuffer {
        AudioBuffer::mono(x, 16000).unwrap()
    }

    #[test]
    fn frame_count_and_too_short() {
        let cfg = MfccConfig::default();
        let m = extract_mfcc(&mono(vec![0.1; 16000]), &cfg).unwrap();
        assert_eq!(m.len(), 1 + (16000 - 400) / 160);
        assert!(m.iter().all(|r| r.len() == 13));
        assert!(matches!(
            extract_mfcc(&mono(vec![0.0; 399]), &cfg),
            Err(WakeError::SignalTooShort { .. })
        ));
    }

    #[test]
    fn silence_frames_are_constant() {
        let m = extract_mfcc(&mono(vec![0.0; 8000]), &MfccConfig::default()).unwrap();
        for r in &m {
            assert_eq!(r, &m[0]);
        }
        let c0 = LOG_FLOOR.ln() * 26f64.sqrt();
        assert!((m[0][0] - c0).abs() < 1e-9);
        assert!(m[0][1..].iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn scaling_shifts_only_c0() {
        let x = WordPattern::wake_word().render(&Variation::NONE, 16000);
        let y: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let cfg = MfccConfig::default();
        let (a, b) = (
            extract_mfcc(&mono(x), &cfg).unwrap(),
            extract_mfcc(&mono(y), &cfg).unwrap(),
        );
        let shift = 4f64.ln() * 26f64.sqrt();
        for (ra, rb) in a.iter().zip(&b) {
            assert!((rb[0] - ra[0] - shift).abs() < 1e-6);
            for (ca, cb) in ra[1..].iter().zip(&rb[1..]) {
                assert!((ca - cb).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn toy_frame_matches_direct_computation() {
        // 8 samples, 8-point DFT, 2 mel bands over 0..8 kHz: bins sit at
        // 0, 2, 4, 6 and 8 kHz. Everything below is computed longhand.
        let x = [0.3, -0.1, 0.5, 0.2, -0.4, 0.1, 0.0, -0.2];
        let cfg = MfccConfig {
            n_coeffs: 2,
            window_s: 8.0 / 16000.0,
            hop_s: 8.0 / 16000.0,
            n_mels: 2,
            fmin_hz: 0.0,
            fmax_hz: 8000.0,
        };
        let got = extract_mfcc(&mono(x.to_vec()), &cfg).unwrap();
        assert_eq!(got.len(), 1);

        let w: Vec<f64> = (0..8)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / 7.0).cos())
            .collect();
        let power: Vec<f64> = (0..5)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for n in 0..8 {
                    let a = -2.0 * PI * (k * n) as f64 / 8.0;
                    re += x[n] * w[n] * a.cos();
                    im += x[n] * w[n] * a.sin();
                }
                re * re + im * im
            })
            .collect();
        let mel_max = 2595.0 * (1.0f64 + 8000.0 / 700.0).log10();
        let edge = |i: f64| 700.0 * (10f64.powf(mel_max * i / 3.0 / 2595.0) - 1.0);
        let (e0, e1, e2, e3) = (edge(0.0), edge(1.0), edge(2.0), edge(3.0));
        let tri = |f: f64, l: f64, c: f64, r: f64| {
            if f >= l && f <= c {
                (f - l) / (c - l)
            } else if f > c && f <= r {
                (r - f) / (r - c)
            } else {
                0.0
            }
        };
        let freqs = [0.0, 2000.0, 4000.0, 6000.0, 8000.0];
        let mel: Vec<f64> = [(e0, e1, e2), (e1, e2, e3)]
            .iter()
            .map(|&(l, c, r)| {
                freqs
                    .iter()
                    .zip(&power)
                    .map(|(&f, p)| tri(f, l, c, r) * p)
                    .sum::<f64>()
                    .ln()
            })
            .collect();
        let c0 = (mel[0] + mel[1]) / 2f64.sqrt();
        let c1 = mel[0] * (PI / 4.0).cos() + mel[1] * (3.0 * PI / 4.0).cos();
        assert!((got[0][0] - c0).abs() < 1e-9, "{} vs {c0}", got[0][0]);
        assert!((got[0][1] - c1).abs() < 1e-9, "{} vs {c1}", got[0][1]);
    }

    #[test]
    fn upper_band_is_invisible() {
        let cfg = MfccConfig::default();
        let ultra = mono(synth::sine(16000, 7000.0, 0.5, 16000));
        let m = extract_mfcc(&ultra, &cfg).unwrap();
        let voiced = extract_mfcc(&mono(synth::sine(16000, 1000.0, 0.5, 16000)), &cfg).unwrap();
        // Only window leakage reaches the filterbank: ~27 dB less per band on average.
        assert!(
            m[10][0] < voiced[10][0] - 25.0,
            "{} vs {}",
            m[10][0],
            voiced[10][0]
        );
    }

    #[test]
    fn rejects_bad_config() {
        let c = MfccConfig {
            fmax_hz: 9000.0,
            ..Default::default()
        };
        assert!(c.validate(16000).is_err());
        let c = MfccConfig {
            n_coeffs: 30,
            ..Default::default()
        };
        assert!(c.validate(16000).is_err());
    }
}
