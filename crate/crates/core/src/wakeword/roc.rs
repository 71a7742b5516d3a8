//! ROC evaluation: miss rate over labelled positives against false alarms
//! per hour over wake-word-free audio, swept over thresholds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::detect::WakeEngine;
use crate::audio::AudioBuffer;
use crate::error::WakeError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_alarms_per_hour: f64,
    pub miss_rate: f64,
}

/// One threshold-independent peak on a negative stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativePeak {
    pub stream: usize,
    pub time_s: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub points: Vec<RocPoint>,
    /// Best peak score per positive; `None` if nothing was scored.
    pub positive_scores: Vec<Option<f64>>,
    /// Every peak found on the negatives, before thresholding.
    pub negative_peaks: Vec<NegativePeak>,
    pub negative_duration_s: f64,
}

impl RocReport {
    /// False alarms at `threshold`, recounted from the peak log.
    pub fn false_alarms_at(&self, threshold: f64) -> usize {
        self.negative_peaks
            .iter()
            .filter(|p| p.score >= threshold)
            .count()
    }

    /// `threshold,fa_per_hour,miss_rate` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fa_per_hour,miss_rate\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{}",
                p.threshold, p.false_alarms_per_hour, p.miss_rate
            );
        }
        s
    }
}

/// Sweeps `thresholds`. Positives shorter than the engine's minimum are padded
/// with trailing silence. Negatives are consumed one buffer at a time so an
/// hour of audio never has to sit in memory at once.
pub fn evaluate_roc<E, I>(
    engine: &E,
    positives: &[AudioBuffer],
    negatives: I,
    thresholds: &[f64],
) -> Result<RocReport, WakeError>
where
    E: WakeEngine + ?Sized,
    I: IntoIterator<Item = Result<AudioBuffer, WakeError>>,
{
    if positives.is_empty() {
        return Err(WakeError::EmptyCorpus("positives"));
    }
    if thresholds.is_empty() {
        return Err(WakeError::EmptyCorpus("thresholds"));
    }
    let min_len = engine.min_stream_len();
    let mut positive_scores = Vec::with_capacity(positives.len());
    for p in positives {
        let padded;
        let stream = if p.len() < min_len {
            let mut x = p.channel(0).to_vec();
            x.resize(min_len, 0.0);
            padded = AudioBuffer::mono(x, p.sample_rate())?;
            &padded
        } else {
            p
        };
        let best = engine
            .peaks(stream)?
            .iter()
            .map(|e| e.score)
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
        positive_scores.push(best);
    }

    let mut negative_peaks = Vec::new();
    let mut negative_duration_s = 0.0;
    for (stream, buf) in negatives.into_iter().enumerate() {
        let buf = buf?;
        negative_duration_s += buf.duration_s();
        for e in engine.peaks(&buf)? {
            negative_peaks.push(NegativePeak {
                stream,
                time_s: e.time_s,
                score: e.score,
            });
        }
    }
    if negative_duration_s == 0.0 {
        return Err(WakeError::EmptyCorpus("negatives"));
    }

    let hours = negative_duration_s / 3600.0;
    let n_pos = positives.len() as f64;
    let points = thresholds
        .iter()
        .map(|&threshold| {
            let misses = positive_scores
                .iter()
                .filter(|s| s.map_or(true, |s| s < threshold))
                .count();
            let fa = negative_peaks
                .iter()
                .filter(|p| p.score >= threshold)
                .count();
            RocPoint {
                threshold,
                false_alarms_per_hour: fa as f64 / hours,
                miss_rate: misses as f64 / n_pos,
            }
        })
        .collect();
    Ok(RocReport {
        points,
        positive_scores,
        negative_peaks,
        negative_duration_s,
    })
}

/// `count` evenly spaced thresholds over `[lo, hi]`.
pub fn threshold_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        // Rounded so grid values print cleanly.
        _ => (0..count)
            .map(|i| ((lo + (hi - lo) * i as f64 / (count - 1) as f64) * 1e9).round() / 1e9)
            .collect(),
    }
}
