//! Deterministic synthetic test signals: white noise, speech-like babble and
//! formant-synthesised "words" used as wake-word stand-ins.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Zero-mean Gaussian noise with the given RMS.
pub fn white_noise(len: usize, rms: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut r = rng(seed, stream);
    (0..len)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut r);
            v * rms
        })
        .collect()
}

pub fn sine(len: usize, freq_hz: f64, amplitude: f64, sample_rate: u32) -> Vec<f64> {
    (0..len)
        .map(|n| amplitude * (2.0 * PI * freq_hz * n as f64 / sample_rate as f64).sin())
        .collect()
}

/// Two-pole resonator applied in place.
fn resonate(x: &mut [f64], center_hz: f64, bandwidth_hz: f64, sample_rate: u32) {
    let fs = sample_rate as f64;
    let r = (-PI * bandwidth_hz / fs).exp();
    let theta = 2.0 * PI * center_hz / fs;
    let a1 = 2.0 * r * theta.cos();
    let a2 = -r * r;
    let gain = 1.0 - r;
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = gain * *v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

fn normalize_rms(x: &mut [f64], target: f64) {
    let rms = crate::audio::rms(x);
    if rms > 0.0 {
        for v in x.iter_mut() {
            *v *= target / rms;
        }
    }
}

/// Noise-excited syllables with random formants separated by short pauses,
/// normalised to `rms` over the whole signal. Temporally white inside each
/// syllable, which keeps linear-prediction based processing honest.
pub fn speech_like(len: usize, rms: f64, seed: u64, sample_rate: u32) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut r = rng(seed, 7);
    let mut out = vec![0.0; len];
    let mut pos = (r.random_range(0.02..0.08) * fs) as usize;
    while pos < len {
        let syl = (r.random_range(0.12..0.3) * fs) as usize;
        let end = (pos + syl).min(len);
        let mut seg: Vec<f64> = (pos..end)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut r);
                v
            })
            .collect();
        let mut voiced = seg.clone();
        resonate(
            &mut voiced,
            r.random_range(300.0..900.0),
            150.0,
            sample_rate,
        );
        resonate(&mut seg, r.random_range(1000.0..3000.0), 300.0, sample_rate);
        let n = seg.len();
        for (i, (a, b)) in seg.iter().zip(&voiced).enumerate() {
            let env = (PI * i as f64 / n.max(1) as f64).sin().powi(2);
            out[pos + i] = env * (0.6 * a + b);
        }
        pos = end + (r.random_range(0.05..0.15) * fs) as usize;
    }
    normalize_rms(&mut out, rms);
    out
}

/// One voiced segment of a synthetic word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Syllable {
    pub f0_hz: f64,
    pub formant1_hz: f64,
    pub formant2_hz: f64,
    pub duration_s: f64,
}

/// A formant-synthesised word: a fixed sequence of voiced syllables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPattern {
    pub name: String,
    pub syllables: Vec<Syllable>,
}

/// Random perturbation applied when rendering a word, so repeated
/// utterances of the same pattern differ like different takes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub pitch_scale: f64,
    pub formant_scale: f64,
    pub tempo_scale: f64,
    pub level_db: f64,
    pub noise_db: f64,
    pub seed: u64,
}

impl Variation {
    pub const NONE: Variation = Variation {
        pitch_scale: 1.0,
        formant_scale: 1.0,
        tempo_scale: 1.0,
        level_db: 0.0,
        noise_db: f64::NEG_INFINITY,
        seed: 0,
    };

    /// A natural take-to-take variation drawn from `seed`.
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed, 11);
        Variation {
            pitch_scale: r.random_range(0.95..1.05),
            formant_scale: r.random_range(0.97..1.03),
            tempo_scale: r.random_range(0.92..1.08),
            level_db: r.random_range(-3.0..3.0),
            noise_db: -45.0,
            seed,
        }
    }
}

impl WordPattern {
    /// The wake word used throughout the synthetic corpora.
    pub fn wake_word() -> Self {
        WordPattern {
            name: "alexa".into(),
            syllables: vec![
                Syllable {
                    f0_hz: 190.0,
                    formant1_hz: 750.0,
                    formant2_hz: 1200.0,
                    duration_s: 0.16,
                },
                Syllable {
                    f0_hz: 210.0,
                    formant1_hz: 450.0,
                    formant2_hz: 2100.0,
                    duration_s: 0.14,
                },
                Syllable {
                    f0_hz: 175.0,
                    formant1_hz: 350.0,
                    formant2_hz: 2600.0,
                    duration_s: 0.12,
                },
                Syllable {
                    f0_hz: 160.0,
                    formant1_hz: 700.0,
                    formant2_hz: 1100.0,
                    duration_s: 0.2,
                },
            ],
        }
    }

    /// A pseudo-random non-wake word.
    pub fn decoy(seed: u64) -> Self {
        let mut r = rng(seed, 13);
        let n = r.random_range(2..=5);
        WordPattern {
            name: format!("decoy{seed}"),
            syllables: (0..n)
                .map(|_| Syllable {
                    f0_hz: r.random_range(110.0..260.0),
                    formant1_hz: r.random_range(280.0..900.0),
                    formant2_hz: r.random_range(900.0..2800.0),
                    duration_s: r.random_range(0.08..0.22),
                })
                .collect(),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.syllables.iter().map(|s| s.duration_s).sum()
    }

    /// Renders the word at `sample_rate`, peak-normalised to 0.5 before the
    /// variation's level offset. `shift_hz` moves every partial up by a fixed
    /// offset (used for the inaudible-band attack); partials at or above
    /// Nyquist are dropped.
    pub fn render_shifted(
        &self,
        variation: &Variation,
        shift_hz: f64,
        sample_rate: u32,
    ) -> Vec<f64> {
        let fs = sample_rate as f64;
        let nyquist = fs / 2.0;
        let mut out = Vec::new();
        let mut phase = vec![0.0f64; 64];
        for syl in &self.syllables {
            let n = (syl.duration_s * variation.tempo_scale * fs).round() as usize;
            let f0 = syl.f0_hz * variation.pitch_scale;
            let f1 = syl.formant1_hz * variation.formant_scale;
            let f2 = syl.formant2_hz * variation.formant_scale;
            for i in 0..n {
                let env = (PI * i as f64 / n as f64).sin().powf(0.6);
                let mut v = 0.0;
                for (h, ph) in phase.iter_mut().enumerate() {
                    let f = f0 * (h + 1) as f64;
                    if f > 4000.0 {
                        break;
                    }
                    let amp = formant_gain(f, f1, 90.0) + 0.7 * formant_gain(f, f2, 140.0);
                    let fout = f + shift_hz;
                    *ph += 2.0 * PI * fout / fs;
                    if fout < nyquist - 50.0 {
                        v += amp * ph.sin();
                    }
                }
                out.push(env * v);
            }
        }
        let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gain = if peak > 0.0 {
            0.5 / peak * crate::audio::db_to_gain(variation.level_db)
        } else {
            0.0
        };
        for v in out.iter_mut() {
            *v *= gain;
        }
        if variation.noise_db.is_finite() {
            let noise = white_noise(
                out.len(),
                crate::audio::db_to_gain(variation.noise_db),
                variation.seed,
                17,
            );
            for (v, n) in out.iter_mut().zip(noise) {
                *v += n;
            }
        }
        out
    }

    pub fn render(&self, variation: &Variation, sample_rate: u32) -> Vec<f64> {
        self.render_shifted(variation, 0.0, sample_rate)
    }
}

fn formant_gain(f: f64, center: f64, bandwidth: f64) -> f64 {
    let x = (f - center) / bandwidth;
    1.0 / (1.0 + x * x)
}

/// Places `clip` into a zero buffer of `len` samples starting at `offset`.
pub fn embed(len: usize, clip: &[f64], offset: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, v) in clip.iter().enumerate() {
        if let Some(o) = out.get_mut(offset + i) {
            *o += v;
        }
    }
    out
}
