//! Enrolled wake-word templates and their JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mfcc::{MfccConfig, MfccExtractor, MfccMatrix};
use crate::audio::AudioBuffer;
use crate::error::WakeError;

pub const MIN_UTTERANCE_S: f64 = 0.3;
pub const MAX_UTTERANCE_S: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WakeTemplate {
    pub name: String,
    /// Front-end the exemplars were computed with; detection reuses it.
    pub mfcc: MfccConfig,
    pub sample_rate: u32,
    /// One MFCC matrix per enrollment utterance.
    pub exemplars: Vec<MfccMatrix>,
}

impl WakeTemplate {
    pub fn validate(&self) -> Result<(), WakeError> {
        let first = self.exemplars.first().ok_or(WakeError::NoUtterances)?;
        let dim = first.first().ok_or(WakeError::EmptyInput)?.len();
        if dim != self.mfcc.n_coeffs {
            return Err(WakeError::DimensionMismatch {
                a: self.mfcc.n_coeffs,
                b: dim,
            });
        }
        for ex in &self.exemplars {
            if ex.is_empty() {
                return Err(WakeError::EmptyInput);
            }
            for row in ex {
                if row.len() != dim {
                    return Err(WakeError::DimensionMismatch {
                        a: dim,
                        b: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(WakeError::Format("non-finite coefficient".into()));
                }
            }
        }
        self.mfcc.validate(self.sample_rate)
    }

    /// Frames of the shortest exemplar.
    pub fn min_frames(&self) -> usize {
        self.exemplars.iter().map(|e| e.len()).min().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, WakeError> {
        let t: WakeTemplate =
            serde_json::from_str(text).map_err(|e| WakeError::Format(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, WakeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WakeError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Builds a template from enrollment recordings, each 0.3-3 s of mono audio
/// at the canonical rate.
pub fn enroll_template(
    name: &str,
    utterances: &[AudioBuffer],
    config: &MfccConfig,
) -> Result<WakeTemplate, WakeError> {
    if utterances.is_empty() {
        return Err(WakeError::NoUtterances);
    }
    let mut exemplars = Vec::with_capacity(utterances.len());
    let mut extractor: Option<MfccExtractor> = None;
    for (index, u) in utterances.iter().enumerate() {
        u.require_canonical()?;
        let d = u.duration_s();
        if !(MIN_UTTERANCE_S..=MAX_UTTERANCE_S).contains(&d) {
            return Err(WakeError::UtteranceDuration {
                index,
                duration_s: d,
            });
        }
        if u.num_channels() != 1 {
            return Err(WakeError::InvalidConfig(format!(
                "utterance {index} is not mono"
            )));
        }
        let ex = match &extractor {
            Some(e) => e,
            None => extractor.insert(MfccExtractor::new(config, u.sample_rate())?),
        };
        exemplars.push(ex.extract(u.channel(0))?);
    }
    Ok(WakeTemplate {
        name: name.to_string(),
        mfcc: config.clone(),
        sample_rate: utterances[0].sample_rate(),
        exemplars,
    })
}
