//! Synthetic wake-word corpora and the labelled manifest format.
//!
//! Positives are varied takes of the wake word with short quiet margins.
//! Negatives are a low noise floor carrying decoy words and speech-like
//! babble, generated in fixed-length chunks from a seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{db_to_gain, AudioBuffer};
use crate::error::WakeError;
use crate::synth::{self, rng, Variation, WordPattern};
use rand::Rng;

pub const CORPUS_NOISE_DBFS: f64 = -50.0;
const MARGIN_S: f64 = 0.2;

fn noise_floor(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    synth::white_noise(len, db_to_gain(CORPUS_NOISE_DBFS), seed, stream)
}

/// Positive utterance `index`: one take of the wake word between 0.2 s quiet margins.
pub fn positive_utterance(seed: u64, index: usize, sample_rate: u32) -> AudioBuffer {
    let take_seed = seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
    let word = WordPattern::wake_word().render(&Variation::random(take_seed), sample_rate);
    let margin = (MARGIN_S * sample_rate as f64) as usize;
    let mut x = noise_floor(word.len() + 2 * margin, take_seed, 300);
    for (o, v) in x[margin..].iter_mut().zip(&word) {
        *o += v;
    }
    AudioBuffer::mono(x, sample_rate).expect("finite synthetic audio")
}

pub fn positive_corpus(seed: u64, count: usize, sample_rate: u32) -> Vec<AudioBuffer> {
    (0..count)
        .map(|i| positive_utterance(seed, i, sample_rate))
        .collect()
}

/// Negative chunk `index`: noise floor, a decoy word about every 2.5 s and a
/// babble burst about every 10 s. Never contains the wake word.
pub fn negative_chunk(seed: u64, index: usize, duration_s: f64, sample_rate: u32) -> AudioBuffer {
    let fs = sample_rate as f64;
    let len = (duration_s * fs).round() as usize;
    let chunk_seed = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut x = noise_floor(len, chunk_seed, 400);
    let mut r = rng(chunk_seed, 401);
    let mut t = r.random_range(0.0..1.0);
    let mut k = 0u64;
    while t < duration_s {
        let decoy = WordPattern::decoy(chunk_seed.wrapping_add(k));
        let clip = decoy.render(&Variation::random(chunk_seed.wrapping_add(k)), sample_rate);
        let at = (t * fs) as usize;
        for (o, v) in x.iter_mut().skip(at).zip(&clip) {
            *o += v;
        }
        t += clip.len() as f64 / fs + r.random_range(1.0..3.0);
        k += 1;
    }
    let mut t = r.random_range(2.0..10.0);
    while t < duration_s {
        let burst_len = (r.random_range(0.5..1.5) * fs) as usize;
        let burst = synth::speech_like(
            burst_len,
            0.05,
            chunk_seed.wrapping_add(1000 + k),
            sample_rate,
        );
        for (o, v) in x.iter_mut().skip((t * fs) as usize).zip(&burst) {
            *o += v;
        }
        t += r.random_range(6.0..14.0);
        k += 1;
    }
    AudioBuffer::mono(x, sample_rate).expect("finite synthetic audio")
}

/// Lazily generated negative audio: `total_s` seconds in `chunk_s` pieces.
#[derive(Debug, Clone)]
pub struct NegativeCorpus {
    pub seed: u64,
    pub total_s: f64,
    pub chunk_s: f64,
    pub sample_rate: u32,
    next: usize,
}

impl NegativeCorpus {
    pub fn new(seed: u64, total_s: f64, chunk_s: f64, sample_rate: u32) -> Self {
        Self {
            seed,
            total_s,
            chunk_s,
            sample_rate,
            next: 0,
        }
    }

    pub fn num_chunks(&self) -> usize {
        (self.total_s / self.chunk_s).ceil() as usize
    }
}

impl Iterator for NegativeCorpus {
    type Item = Result<AudioBuffer, WakeError>;

    fn next(&mut self) -> Option<Self::Item> {
        let start = self.next as f64 * self.chunk_s;
        if start >= self.total_s - 1e-9 {
            return None;
        }
        let dur = self.chunk_s.min(self.total_s - start);
        let chunk = negative_chunk(self.seed, self.next, dur, self.sample_rate);
        self.next += 1;
        Some(Ok(chunk))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
}

/// TOML list of audio files with labels; relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    #[serde(default, rename = "entry")]
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<Self, WakeError> {
        toml::from_str(text).map_err(|e| WakeError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, WakeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WakeError::Format(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    pub fn paths(&self, label: Label, base: &Path) -> Vec<PathBuf> {
        self.entries
            .iter()
            .filter(|e| e.label == label)
            .map(|e| {
                if e.path.is_absolute() {
                    e.path.clone()
                } else {
                    base.join(&e.path)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(
            positive_utterance(3, 4, 16000),
            positive_utterance(3, 4, 16000)
        );
        assert_ne!(
            positive_utterance(3, 4, 16000),
            positive_utterance(3, 5, 16000)
        );
        assert_eq!(
            negative_chunk(9, 2, 5.0, 16000),
            negative_chunk(9, 2, 5.0, 16000)
        );
    }

    #[test]
    fn negative_corpus_covers_total_duration() {
        let c = NegativeCorpus::new(1, 25.0, 10.0, 16000);
        assert_eq!(c.num_chunks(), 3);
        let total: f64 = c.map(|b| b.unwrap().duration_s()).sum();
        assert!((total - 25.0).abs() < 1e-9);
    }

    #[test]
    fn manifest_round_trip() {
        let m = CorpusManifest {
            entries: vec![
                ManifestEntry {
                    path: "pos/a.wav".into(),
                    label: Label::Positive,
                },
                ManifestEntry {
                    path: "/abs/neg.wav".into(),
                    label: Label::Negative,
                },
            ],
        };
        let back = CorpusManifest::parse(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.paths(Label::Positive, Path::new("/data")),
            vec![PathBuf::from("/data/pos/a.wav")]
        );
        assert_eq!(
            back.paths(Label::Negative, Path::new("/data")),
            vec![PathBuf::from("/abs/neg.wav")]
        );
        assert!(CorpusManifest::parse("[[entry]]\npath = \"x\"\nlabel = \"maybe\"\n").is_err());
    }
}
