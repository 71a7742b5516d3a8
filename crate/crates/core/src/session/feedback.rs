//! Twelve-LED pixel ring feedback.

use serde::{Deserialize, Serialize};

use super::state::Phase;
use crate::signal::wrap_degrees;

pub const RING_SLOTS: usize = 12;
pub const DEGREES_PER_SLOT: f64 = 360.0 / RING_SLOTS as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedColor {
    Off,
    Green,
    /// The slot pointing at the talker.
    Pointer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackState {
    pub slots: [LedColor; RING_SLOTS],
    pub doa_pointer: Option<usize>,
}

/// `round(azimuth / 30) mod 12`, with the azimuth wrapped into `[0, 360)`.
pub fn pointer_slot(azimuth_deg: f64) -> usize {
    ((wrap_degrees(azimuth_deg) / DEGREES_PER_SLOT).round() as usize) % RING_SLOTS
}

/// Green ring while authenticated or streaming, dark when idle; the DoA
/// slot is highlighted whenever an azimuth is known.
pub fn feedback_for(phase: Phase, doa_azimuth: Option<f64>) -> FeedbackState {
    let base = match phase {
        Phase::Idle => LedColor::Off,
        Phase::Authenticated | Phase::Streaming => LedColor::Green,
    };
    let mut slots = [base; RING_SLOTS];
    let doa_pointer = doa_azimuth.filter(|a| a.is_finite()).map(pointer_slot);
    if let Some(p) = doa_pointer {
        slots[p] = LedColor::Pointer;
    }
    FeedbackState { slots, doa_pointer }
}
