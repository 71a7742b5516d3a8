//! Minimum-statistics noise floor tracking and spectral subtraction.

use num_complex::Complex64;

use crate::error::DspError;
use crate::stft::Spectrogram;

/// Recursive smoothing factor applied to per-bin power before the minimum search.
pub const POWER_SMOOTHING: f64 = 0.9;
/// Ratio of mean noise power to the expected minimum of the smoothed power for
/// white Gaussian noise with the default STFT and smoothing.
pub const MIN_STATS_BIAS: f64 = 2.2;

/// Per-frame, per-bin noise magnitude floor.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    /// `floors[t][k]`: estimated noise magnitude of bin `k` at frame `t`.
    pub floors: Vec<Vec<f64>>,
    pub update_count: usize,
}

impl NoiseEstimate {
    /// A constant floor applied to every frame.
    pub fn constant(floor: Vec<f64>) -> Self {
        Self {
            floors: vec![floor],
            update_count: 0,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.floors.first().map(|f| f.len()).unwrap_or(0)
    }

    /// Floor at frame `t`; the last frame's floor holds beyond the end.
    pub fn floor_at(&self, t: usize) -> &[f64] {
        &self.floors[t.min(self.floors.len() - 1)]
    }

    /// Floor averaged over frames, per bin.
    pub fn mean_floor(&self) -> Vec<f64> {
        let n = self.floors.len() as f64;
        let mut out = vec![0.0; self.num_bins()];
        for f in &self.floors {
            for (o, v) in out.iter_mut().zip(f) {
                *o += v / n;
            }
        }
        out
    }
}

/// Tracks the noise floor with minimum statistics: per-bin power is smoothed
/// recursively and the floor is the bias-compensated minimum over a sliding
/// window of `window_frames`. The first `initial_frames` are assumed speech
/// free; their mean power seeds the smoother and the window.
pub fn estimate_noise(
    spec: &Spectrogram,
    initial_frames: usize,
    window_frames: usize,
) -> Result<NoiseEstimate, DspError> {
    if initial_frames < 5 {
        return Err(DspError::InvalidConfig(format!(
            "initial_frames must be >= 5, got {initial_frames}"
        )));
    }
    if spec.num_frames() < initial_frames {
        return Err(DspError::TooFewFrames {
            needed: initial_frames,
            found: spec.num_frames(),
        });
    }
    let bins = spec.num_bins();
    let window = window_frames.max(1);
    let mut smoothed = vec![0.0; bins];
    for f in &spec.frames[..initial_frames] {
        for (s, c) in smoothed.iter_mut().zip(f) {
            *s += c.norm_sqr() / initial_frames as f64;
        }
    }
    let seed = smoothed.clone();
    // Recent smoothed powers. The seed enters pre-divided by the bias so that
    // while it is the minimum the floor equals the seed mean.
    let mut history: Vec<Vec<f64>> = vec![seed.iter().map(|s| s / MIN_STATS_BIAS).collect()];
    let mut floors = Vec::with_capacity(spec.num_frames());
    for (t, frame) in spec.frames.iter().enumerate() {
        for (s, c) in smoothed.iter_mut().zip(frame) {
            *s = POWER_SMOOTHING * *s + (1.0 - POWER_SMOOTHING) * c.norm_sqr();
        }
        history.push(smoothed.clone());
        if history.len() > window {
            history.remove(0);
        }
        let floor: Vec<f64> = (0..bins)
            .map(|k| {
                let m = history.iter().map(|h| h[k]).fold(f64::INFINITY, f64::min);
                if t < initial_frames {
                    seed[k].sqrt()
                } else {
                    (MIN_STATS_BIAS * m).sqrt()
                }
            })
            .collect();
        floors.push(floor);
    }
    Ok(NoiseEstimate {
        floors,
        update_count: spec.num_frames(),
    })
}

/// Spectral subtraction: `|Y| <- max(|Y| - alpha * floor, beta * |Y|)` with
/// the phase of `Y` kept.
pub fn suppress_noise(
    spec: &Spectrogram,
    noise: &NoiseEstimate,
    alpha: f64,
    beta: f64,
) -> Result<Spectrogram, DspError> {
    if noise.num_bins() != spec.num_bins() {
        return Err(DspError::BinMismatch {
            spec: spec.num_bins(),
            estimate: noise.num_bins(),
        });
    }
    if !(beta > 0.0 && beta < 1.0) || !(alpha >= 0.0) {
        return Err(DspError::InvalidConfig(format!(
            "alpha {alpha} / beta {beta} out of range"
        )));
    }
    let frames = spec
        .frames
        .iter()
        .enumerate()
        .map(|(t, frame)| {
            frame
                .iter()
                .zip(noise.floor_at(t))
                .map(|(c, fl)| {
                    let mag = c.norm();
                    if mag == 0.0 {
                        return *c;
                    }
                    let target = (mag - alpha * fl).max(beta * mag);
                    *c * (target / mag)
                })
                .collect::<Vec<Complex64>>()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        ..spec.clone()
    })
}
