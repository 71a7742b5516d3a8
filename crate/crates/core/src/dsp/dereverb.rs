//! Weighted prediction error (WPE) de-reverberation.
//!
//! For every frequency bin the late reverberation at frame `t` is predicted
//! from the observed frames `t-D-K+1 ..= t-D` with a variance-weighted least
//! squares filter and subtracted. The weights come from the previous
//! iteration's output power, starting from the observation itself. With
//! several channels the prediction for each channel draws on the past of all
//! of them, which reaches much further into the tail than one channel can.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::DspError;
use crate::stft::Spectrogram;

/// Relative floor applied to the per-frame power weights.
const WEIGHT_FLOOR: f64 = 1e-4;
/// Diagonal loading of the correlation matrix, relative to its mean diagonal.
const DIAGONAL_LOADING: f64 = 1e-6;
/// Frames on each side averaged into the power weight of a frame.
pub const PSD_CONTEXT: usize = 1;

/// Single-channel WPE.
pub fn dereverberate(
    spec: &Spectrogram,
    delay: usize,
    taps: usize,
    iterations: usize,
) -> Result<Spectrogram, DspError> {
    let mut out = dereverberate_multichannel(std::slice::from_ref(spec), delay, taps, iterations)?;
    Ok(out.remove(0))
}

/// Multichannel WPE: every channel is de-reverberated using the delayed past
/// of all channels. Spectrograms must share shape.
pub fn dereverberate_multichannel(
    specs: &[Spectrogram],
    delay: usize,
    taps: usize,
    iterations: usize,
) -> Result<Vec<Spectrogram>, DspError> {
    if delay == 0 || taps == 0 {
        return Err(DspError::InvalidConfig(
            "prediction delay and order must be positive".into(),
        ));
    }
    let Some(first) = specs.first() else {
        return Err(DspError::TooFewChannels {
            needed: 1,
            found: 0,
        });
    };
    let frames = first.num_frames();
    let bins = first.num_bins();
    for s in specs {
        if s.num_frames() != frames {
            return Err(DspError::LengthMismatch {
                a: frames,
                b: s.num_frames(),
            });
        }
        if s.num_bins() != bins {
            return Err(DspError::BinMismatch {
                spec: bins,
                estimate: s.num_bins(),
            });
        }
    }
    if frames <= delay + taps {
        return Err(DspError::TooFewFrames {
            needed: delay + taps + 1,
            found: frames,
        });
    }
    let mut out: Vec<Spectrogram> = specs.to_vec();
    let mut observed = vec![vec![Complex64::default(); frames]; specs.len()];
    for k in 0..bins {
        for (obs, s) in observed.iter_mut().zip(specs) {
            for (t, f) in s.frames.iter().enumerate() {
                obs[t] = f[k];
            }
        }
        let cleaned = dereverberate_bin(&observed, delay, taps, iterations.max(1));
        for (o, c) in out.iter_mut().zip(cleaned) {
            for (t, v) in c.into_iter().enumerate() {
                o.frames[t][k] = v;
            }
        }
    }
    Ok(out)
}

fn dereverberate_bin(
    y: &[Vec<Complex64>],
    delay: usize,
    taps: usize,
    iterations: usize,
) -> Vec<Vec<Complex64>> {
    let m = y.len();
    let n = y[0].len();
    let dim = m * taps;
    let power =
        |x: &[Vec<Complex64>], t: usize| x.iter().map(|c| c[t].norm_sqr()).sum::<f64>() / m as f64;
    let mean_power = (0..n).map(|t| power(y, t)).sum::<f64>() / n as f64;
    if mean_power == 0.0 {
        return y.to_vec();
    }
    // Stacked past: entry (i * m + c) is channel c at frame t - delay - i.
    let stack_at = |t: usize, stack: &mut [Complex64]| {
        for i in 0..taps {
            for c in 0..m {
                stack[i * m + c] = t
                    .checked_sub(delay + i)
                    .map(|s| y[c][s])
                    .unwrap_or_default();
            }
        }
    };
    let mut stack = vec![Complex64::default(); dim];
    let mut d = y.to_vec();
    for _ in 0..iterations {
        let inst: Vec<f64> = (0..n).map(|t| power(&d, t)).collect();
        let mut r = DMatrix::<Complex64>::zeros(dim, dim);
        let mut p = DMatrix::<Complex64>::zeros(dim, m);
        for t in 0..n {
            let lo = t.saturating_sub(PSD_CONTEXT);
            let hi = (t + PSD_CONTEXT + 1).min(n);
            let lambda = (inst[lo..hi].iter().sum::<f64>() / (hi - lo) as f64)
                .max(WEIGHT_FLOOR * mean_power);
            stack_at(t, &mut stack);
            for i in 0..dim {
                let si = stack[i] / lambda;
                if si == Complex64::default() {
                    continue;
                }
                for c in 0..m {
                    p[(i, c)] += si * y[c][t].conj();
                }
                for j in 0..dim {
                    r[(i, j)] += si * stack[j].conj();
                }
            }
        }
        let load =
            DIAGONAL_LOADING * (0..dim).map(|i| r[(i, i)].re).sum::<f64>() / dim as f64 + 1e-300;
        for i in 0..dim {
            r[(i, i)] += Complex64::new(load, 0.0);
        }
        // Filters G minimise sum_t |y_t - G^H ytilde_t|^2 / lambda_t.
        let g = match r.clone().cholesky() {
            Some(ch) => ch.solve(&p),
            None => match r.lu().solve(&p) {
                Some(g) => g,
                None => return y.to_vec(),
            },
        };
        for t in 0..n {
            stack_at(t, &mut stack);
            for c in 0..m {
                let pred: Complex64 = (0..dim).map(|i| g[(i, c)].conj() * stack[i]).sum();
                d[c][t] = y[c][t] - pred;
            }
        }
    }
    d
}
