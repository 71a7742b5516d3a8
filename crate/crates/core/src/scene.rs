//! Synthetic far-field microphone-array scenes with ground truth.
//!
//! Each microphone receives every source as a plane wave delayed by the
//! projection of the mic position onto the arrival direction, optionally
//! convolved with a seeded exponentially decaying reverberation tail, plus
//! independent white noise and a common loudspeaker echo.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{db_to_gain, read_wav, AudioBuffer, CANONICAL_RATE};
use crate::error::SceneError;
use crate::signal::convolve;
use crate::synth;

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_RADIUS_M: f64 = 0.032;
pub const DEFAULT_MAX_DISTANCE_M: f64 = 5.0;
/// Taps of the windowed-sinc fractional delay filter.
pub const FRACTIONAL_DELAY_TAPS: usize = 31;
/// Delay between the direct path and the start of the reverberant tail.
pub const REVERB_ONSET_S: f64 = 0.004;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Microphone coordinates `(x, y)` in meters.
    pub mic_positions: Vec<[f64; 2]>,
    /// m/s
    #[serde(default = "default_speed")]
    pub speed_of_sound: f64,
}

fn default_speed() -> f64 {
    SPEED_OF_SOUND
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::circular(4, DEFAULT_RADIUS_M)
    }
}

impl ArrayGeometry {
    /// `n` microphones evenly spaced on a circle, the first on the +x axis.
    pub fn circular(n: usize, radius: f64) -> Self {
        let mic_positions = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self {
            mic_positions,
            speed_of_sound: SPEED_OF_SOUND,
        }
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.mic_positions.len() < 2 {
            return Err(SceneError::InvalidGeometry(
                "at least 2 microphones required".into(),
            ));
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(SceneError::InvalidGeometry(
                "speed of sound must be positive".into(),
            ));
        }
        for (i, a) in self.mic_positions.iter().enumerate() {
            if !a[0].is_finite() || !a[1].is_finite() {
                return Err(SceneError::InvalidGeometry(format!(
                    "mic {i} position not finite"
                )));
            }
            for b in &self.mic_positions[i + 1..] {
                if a == b {
                    return Err(SceneError::InvalidGeometry(format!(
                        "duplicate mic position {a:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.mic_positions.len() as f64;
        let (sx, sy) = self
            .mic_positions
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        [sx / n, sy / n]
    }

    /// Largest distance from a microphone to the centroid.
    pub fn radius(&self) -> f64 {
        let c = self.centroid();
        self.mic_positions
            .iter()
            .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest pairwise microphone distance.
    pub fn aperture(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.mic_positions.iter().enumerate() {
            for b in &self.mic_positions[i + 1..] {
                best = best.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        best
    }
}

/// Plane-wave arrival delay of each microphone relative to the array
/// centroid, in seconds: `-(p_i - c) . u(az) / c_sound`. Negative means the
/// wavefront reaches that microphone before the centroid.
pub fn delays_for_azimuth(geometry: &ArrayGeometry, azimuth_deg: f64) -> Vec<f64> {
    let a = azimuth_deg.to_radians();
    let u = [a.cos(), a.sin()];
    let c = geometry.centroid();
    geometry
        .mic_positions
        .iter()
        .map(|p| -((p[0] - c[0]) * u[0] + (p[1] - c[1]) * u[1]) / geometry.speed_of_sound)
        .collect()
}

fn blackman(u: f64, half: f64) -> f64 {
    if u.abs() >= half {
        return 0.0;
    }
    let x = PI * u / half;
    0.42 + 0.5 * x.cos() + 0.08 * (2.0 * x).cos()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Delays `signal` by `delay_s` (negative advances) using a 31-tap
/// Blackman-windowed sinc interpolator. Samples shifted in from outside the
/// signal are zero; output length equals input length.
pub fn fractional_delay(
    signal: &[f64],
    delay_s: f64,
    sample_rate: u32,
) -> Result<Vec<f64>, SceneError> {
    let d = delay_s * sample_rate as f64;
    if !d.is_finite() || d.abs() >= signal.len() as f64 {
        return Err(SceneError::DelayTooLong {
            delay_samples: d,
            len: signal.len(),
        });
    }
    Ok(fractional_delay_samples(signal, d))
}

pub(crate) fn fractional_delay_samples(signal: &[f64], d: f64) -> Vec<f64> {
    fractional_delay_range(signal, d, 0, signal.len())
}

/// Samples `start..end` of `signal` delayed by `d` samples, reading from the
/// whole signal so block boundaries see full filter support.
pub(crate) fn fractional_delay_range(signal: &[f64], d: f64, start: usize, end: usize) -> Vec<f64> {
    let whole = d.floor();
    let frac = d - whole;
    let whole = whole as i64;
    let half_taps = (FRACTIONAL_DELAY_TAPS / 2) as i64;
    let half_width = half_taps as f64 + 1.0;
    let n = signal.len() as i64;
    let range = start as i64..end as i64;
    if frac == 0.0 {
        return range
            .map(|t| {
                let m = t - whole;
                if (0..n).contains(&m) {
                    signal[m as usize]
                } else {
                    0.0
                }
            })
            .collect();
    }
    let kernel: Vec<f64> = (-half_taps..=half_taps)
        .map(|j| {
            let u = j as f64 - frac;
            sinc(u) * blackman(u, half_width)
        })
        .collect();
    range
        .map(|t| {
            let mut acc = 0.0;
            for (k, j) in (-half_taps..=half_taps).enumerate() {
                let m = t - whole - j;
                if (0..n).contains(&m) {
                    acc += signal[m as usize] * kernel[k];
                }
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    /// Degrees in `[0, 360)`, counter-clockwise from +x.
    pub azimuth_deg: f64,
    /// Meters; amplitude falls as `1 / distance` beyond the 1 m reference.
    pub distance_m: f64,
    pub signal: AudioBuffer,
    pub level_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub sources: Vec<SourceSpec>,
    /// RMS of the independent per-mic white noise in dBFS; `None` disables it.
    pub noise_level_db: Option<f64>,
    /// Reverberation time in seconds; 0 disables the tail.
    pub t60: f64,
    /// Direct-to-reverberant energy ratio of the synthetic impulse response.
    pub reverb_drr_db: f64,
    pub echo_reference: Option<AudioBuffer>,
    pub echo_path: Option<Vec<f64>>,
    /// Minimum scene length; the scene is at least as long as every signal.
    pub duration_s: Option<f64>,
    pub max_distance_m: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            noise_level_db: None,
            t60: 0.0,
            reverb_drr_db: 0.0,
            echo_reference: None,
            echo_path: None,
            duration_s: None,
            max_distance_m: DEFAULT_MAX_DISTANCE_M,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTruth {
    pub azimuth_deg: f64,
    pub distance_m: f64,
    /// Per-mic arrival delay relative to the centroid, seconds.
    pub delays_s: Vec<f64>,
    /// Per-mic delay split into whole samples and a fraction in `[0, 1)`.
    pub delays_samples: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub sources: Vec<SourceTruth>,
    /// First source, scaled, as it would arrive at the centroid without reverb.
    pub clean_target: Vec<f64>,
    /// First source's direct path at each microphone (no reverb, no noise).
    pub direct_target: Vec<Vec<f64>>,
    /// Loudspeaker echo as received at every microphone.
    pub echo_only: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneOutput {
    pub mics: AudioBuffer,
    pub truth: SceneTruth,
}

/// Seeded reverberation impulse response: a unit direct path followed, after
/// [`REVERB_ONSET_S`], by Gaussian noise with amplitude decaying 60 dB over
/// `t60`, scaled so tail energy is `drr_db` below the direct path.
pub fn reverb_impulse_response(
    t60: f64,
    drr_db: f64,
    sample_rate: u32,
    seed: u64,
    stream: u64,
) -> Vec<f64> {
    if t60 <= 0.0 {
        return vec![1.0];
    }
    let fs = sample_rate as f64;
    let onset = (REVERB_ONSET_S * fs).round() as usize;
    let len = onset + (t60 * fs).ceil() as usize;
    let noise = synth::white_noise(len, 1.0, seed, stream);
    let mut h = vec![0.0; len];
    h[0] = 1.0;
    let decay = 3.0 * std::f64::consts::LN_10 / (t60 * fs);
    let mut tail_energy = 0.0;
    for n in onset..len {
        let v = noise[n] * (-decay * (n - onset) as f64).exp();
        h[n] = v;
        tail_energy += v * v;
    }
    if tail_energy > 0.0 {
        let g = (10f64.powf(-drr_db / 10.0) / tail_energy).sqrt();
        for v in h[onset..].iter_mut() {
            *v *= g;
        }
    }
    h
}

/// Stream id for a source's impulse response, derived from its position so
/// that a source gets the same room response regardless of which other
/// sources share the scene.
fn reverb_stream(source: &SourceSpec, mic: usize) -> u64 {
    let mut h = source.azimuth_deg.to_bits() ^ source.distance_m.to_bits().rotate_left(17);
    h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^ (mic as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ 0x5EED
}

pub fn simulate_scene(
    scene: &SceneSpec,
    geometry: &ArrayGeometry,
) -> Result<SceneOutput, SceneError> {
    geometry.validate()?;
    let fs = CANONICAL_RATE;
    if scene.sources.is_empty() && scene.noise_level_db.is_none() && scene.echo_reference.is_none()
    {
        return Err(SceneError::EmptyScene);
    }
    if scene.echo_reference.is_some() && scene.echo_path.is_none() {
        return Err(SceneError::MissingEchoPath);
    }
    if !(scene.t60 >= 0.0) {
        return Err(SceneError::Parse("t60 must be >= 0".into()));
    }
    for (index, s) in scene.sources.iter().enumerate() {
        s.signal.require_canonical()?;
        if s.signal.num_channels() != 1 {
            return Err(SceneError::InvalidSource {
                index,
                reason: "signal must be mono".into(),
            });
        }
        if !(s.distance_m > 0.0) || s.distance_m > scene.max_distance_m {
            return Err(SceneError::InvalidSource {
                index,
                reason: format!(
                    "distance {} m outside (0, {}]",
                    s.distance_m, scene.max_distance_m
                ),
            });
        }
        if !(0.0..360.0).contains(&s.azimuth_deg) {
            return Err(SceneError::InvalidSource {
                index,
                reason: format!("azimuth {} outside [0, 360)", s.azimuth_deg),
            });
        }
    }
    if let Some(r) = &scene.echo_reference {
        r.require_canonical()?;
    }

    let mut len = scene
        .sources
        .iter()
        .map(|s| s.signal.len())
        .chain(scene.echo_reference.iter().map(|r| r.len()))
        .max()
        .unwrap_or(0);
    if let Some(d) = scene.duration_s {
        len = len.max((d * fs as f64).round() as usize);
    }
    if len == 0 {
        return Err(SceneError::EmptyScene);
    }

    let n_mics = geometry.num_mics();
    let mut mics = vec![vec![0.0; len]; n_mics];
    let mut truth_sources = Vec::new();
    let mut direct_target = vec![vec![0.0; len]; n_mics];
    let mut clean_target = vec![0.0; len];

    for (si, src) in scene.sources.iter().enumerate() {
        let gain = db_to_gain(src.level_db) / src.distance_m.max(1.0);
        let mut sig: Vec<f64> = src.signal.channel(0).iter().map(|v| v * gain).collect();
        sig.resize(len, 0.0);
        let delays = delays_for_azimuth(geometry, src.azimuth_deg);
        if si == 0 {
            clean_target.copy_from_slice(&sig);
        }
        for (m, &d) in delays.iter().enumerate() {
            let direct = fractional_delay_samples(&sig, d * fs as f64);
            let received = if scene.t60 > 0.0 {
                let h = reverb_impulse_response(
                    scene.t60,
                    scene.reverb_drr_db,
                    fs,
                    scene.seed,
                    reverb_stream(src, m),
                );
                let mut r = convolve(&direct, &h);
                r.truncate(len);
                r
            } else {
                direct.clone()
            };
            for (o, v) in mics[m].iter_mut().zip(&received) {
                *o += v;
            }
            if si == 0 {
                direct_target[m] = direct;
            }
        }
        truth_sources.push(SourceTruth {
            azimuth_deg: src.azimuth_deg,
            distance_m: src.distance_m,
            delays_samples: delays
                .iter()
                .map(|d| {
                    let s = d * fs as f64;
                    (s.floor() as i64, s - s.floor())
                })
                .collect(),
            delays_s: delays,
        });
    }

    if let Some(db) = scene.noise_level_db {
        let rms = db_to_gain(db);
        for (m, ch) in mics.iter_mut().enumerate() {
            let noise = synth::white_noise(len, rms, scene.seed, 100 + m as u64);
            for (o, v) in ch.iter_mut().zip(noise) {
                *o += v;
            }
        }
    }

    let echo_only = match (&scene.echo_reference, &scene.echo_path) {
        (Some(r), Some(h)) => {
            let mut e = convolve(r.channel(0), h);
            e.resize(len, 0.0);
            for ch in mics.iter_mut() {
                for (o, v) in ch.iter_mut().zip(&e) {
                    *o += v;
                }
            }
            Some(e)
        }
        _ => None,
    };

    Ok(SceneOutput {
        mics: AudioBuffer::from_channels(mics, fs)?,
        truth: SceneTruth {
            sources: truth_sources,
            clean_target,
            direct_target,
            echo_only,
        },
    })
}

/// Where a scene source's samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    /// Mono WAV at 16 kHz, path relative to the scene file.
    Wav { path: PathBuf },
    /// Gaussian white noise with the given RMS (linear).
    Noise {
        duration_s: f64,
        rms: f64,
        seed: u64,
    },
    /// Noise-excited syllables.
    SpeechLike {
        duration_s: f64,
        rms: f64,
        seed: u64,
    },
    Sine {
        duration_s: f64,
        freq_hz: f64,
        amplitude: f64,
    },
    /// The synthetic wake word, optionally shifted into the 6-8 kHz band.
    WakeWord {
        #[serde(default)]
        variation_seed: Option<u64>,
        #[serde(default)]
        band_shift_hz: f64,
        #[serde(default)]
        lead_s: f64,
        #[serde(default)]
        tail_s: f64,
    },
}

impl SignalSource {
    pub fn render(&self, base: &Path) -> Result<AudioBuffer, SceneError> {
        let fs = CANONICAL_RATE;
        let samples = |d: f64| (d * fs as f64).round() as usize;
        let data = match self {
            SignalSource::Wav { path } => {
                let buf = read_wav(base.join(path))?;
                buf.require_canonical()?;
                if buf.num_channels() != 1 {
                    return Err(SceneError::Parse(format!("{} is not mono", path.display())));
                }
                return Ok(buf);
            }
            SignalSource::Noise {
                duration_s,
                rms,
                seed,
            } => synth::white_noise(samples(*duration_s), *rms, *seed, 0),
            SignalSource::SpeechLike {
                duration_s,
                rms,
                seed,
            } => synth::speech_like(samples(*duration_s), *rms, *seed, fs),
            SignalSource::Sine {
                duration_s,
                freq_hz,
                amplitude,
            } => synth::sine(samples(*duration_s), *freq_hz, *amplitude, fs),
            SignalSource::WakeWord {
                variation_seed,
                band_shift_hz,
                lead_s,
                tail_s,
            } => {
                let v = variation_seed
                    .map(synth::Variation::random)
                    .unwrap_or(synth::Variation::NONE);
                let word = synth::WordPattern::wake_word().render_shifted(&v, *band_shift_hz, fs);
                let lead = samples(*lead_s);
                synth::embed(lead + word.len() + samples(*tail_s), &word, lead)
            }
        };
        Ok(AudioBuffer::mono(data, fs)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub azimuth_deg: f64,
    #[serde(default = "one")]
    pub distance_m: f64,
    #[serde(default)]
    pub level_db: f64,
    pub signal: SignalSource,
}

fn one() -> f64 {
    1.0
}

/// Text form of a [`SceneSpec`], loaded from TOML.
///
/// Units: azimuth in degrees, distances in meters, levels in dB (noise is
/// dBFS RMS), `t60` and durations in seconds. Echo paths are FIR taps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_level_db: Option<f64>,
    #[serde(default)]
    pub t60: f64,
    #[serde(default)]
    pub reverb_drr_db: f64,
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub geometry: Option<ArrayGeometry>,
    #[serde(default)]
    pub echo_reference: Option<SignalSource>,
    #[serde(default)]
    pub echo_path: Option<Vec<f64>>,
    #[serde(default)]
    pub sources: Vec<SourceFile>,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SceneError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Renders all signal references, resolving relative paths against `base`.
    pub fn resolve(&self, base: &Path) -> Result<(SceneSpec, ArrayGeometry), SceneError> {
        let sources = self
            .sources
            .iter()
            .map(|s| {
                Ok(SourceSpec {
                    azimuth_deg: s.azimuth_deg,
                    distance_m: s.distance_m,
                    level_db: s.level_db,
                    signal: s.signal.render(base)?,
                })
            })
            .collect::<Result<Vec<_>, SceneError>>()?;
        let echo_reference = self
            .echo_reference
            .as_ref()
            .map(|r| r.render(base))
            .transpose()?;
        Ok((
            SceneSpec {
                sources,
                noise_level_db: self.noise_level_db,
                t60: self.t60,
                reverb_drr_db: self.reverb_drr_db,
                echo_reference,
                echo_path: self.echo_path.clone(),
                duration_s: self.duration_s,
                max_distance_m: DEFAULT_MAX_DISTANCE_M,
                seed: self.seed,
            },
            self.geometry.clone().unwrap_or_default(),
        ))
    }
}
