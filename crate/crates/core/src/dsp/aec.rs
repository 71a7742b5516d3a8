//! NLMS acoustic echo cancellation.

use serde::{Deserialize, Serialize};

use crate::error::DspError;

/// Adaptive FIR estimate of the loudspeaker-to-microphone path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AecState {
    pub taps: Vec<f64>,
    /// NLMS step size, in `(0, 2)`.
    pub step_size: f64,
    /// Added to the reference energy in the update denominator.
    pub regularization: f64,
    /// Last `taps.len()` reference samples, newest first.
    history: Vec<f64>,
    history_energy: f64,
}

impl AecState {
    pub fn new(length: usize, step_size: f64, regularization: f64) -> Result<Self, DspError> {
        if length == 0 {
            return Err(DspError::InvalidConfig(
                "AEC filter length must be positive".into(),
            ));
        }
        if !(step_size > 0.0 && step_size < 2.0) {
            return Err(DspError::InvalidConfig(format!(
                "AEC step size {step_size} outside (0, 2)"
            )));
        }
        if !(regularization > 0.0) {
            return Err(DspError::InvalidConfig(
                "AEC regularization must be positive".into(),
            ));
        }
        Ok(Self {
            taps: vec![0.0; length],
            step_size,
            regularization,
            history: vec![0.0; length],
            history_energy: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Processes one sample pair and returns the error (echo-reduced) sample.
    pub fn process_sample(&mut self, mic: f64, reference: f64) -> f64 {
        let l = self.taps.len();
        let oldest = self.history[l - 1];
        self.history.copy_within(0..l - 1, 1);
        self.history[0] = reference;
        self.history_energy += reference * reference - oldest * oldest;
        if self.history_energy < 0.0 {
            self.history_energy = 0.0;
        }
        let estimate: f64 = self
            .taps
            .iter()
            .zip(&self.history)
            .map(|(w, x)| w * x)
            .sum();
        let e = mic - estimate;
        if self.history_energy > 0.0 {
            let g = self.step_size * e / (self.history_energy + self.regularization);
            for (w, x) in self.taps.iter_mut().zip(&self.history) {
                *w += g * x;
            }
        }
        e
    }

    /// Recomputes the running reference energy exactly; call after long runs
    /// if drift matters.
    pub fn resync_energy(&mut self) {
        self.history_energy = self.history.iter().map(|x| x * x).sum();
    }
}

/// Runs NLMS over a whole signal: `e = d - w.x`, `w += mu e x / (|x|^2 + eps)`.
pub fn aec_nlms(
    mic: &[f64],
    reference: &[f64],
    mut state: AecState,
) -> Result<(Vec<f64>, AecState), DspError> {
    if mic.len() != reference.len() {
        return Err(DspError::LengthMismatch {
            a: mic.len(),
            b: reference.len(),
        });
    }
    if mic.iter().any(|v| !v.is_finite()) {
        return Err(DspError::NonFinite("microphone signal"));
    }
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(DspError::NonFinite("echo reference"));
    }
    let mut out = Vec::with_capacity(mic.len());
    for (i, (&d, &x)) in mic.iter().zip(reference).enumerate() {
        out.push(state.process_sample(d, x));
        if i % 4096 == 4095 {
            state.resync_energy();
        }
    }
    Ok((out, state))
}

/// Echo return loss enhancement in dB: `10 log10(E[d^2] / E[e^2])`.
pub fn erle_db(mic: &[f64], error: &[f64]) -> f64 {
    let d: f64 = mic.iter().map(|v| v * v).sum();
    let e: f64 = error.iter().map(|v| v * v).sum();
    10.0 * (d / e).log10()
}
