//! Sliding-window DTW spotting.
//!
//! Candidate windows start every `hop_s` and span 0.5x-1.5x each exemplar's
//! length. A start's score is `1 / (1 + d)` with `d` the smallest
//! normalised DTW distance over exemplars and window lengths. Peaks are
//! picked greedily by score with a refractory gap, independently of any
//! threshold; thresholding afterwards keeps the event set nested across
//! thresholds.

use serde::{Deserialize, Serialize};

use super::dtw::{dtw_end_row, frame_cost};
use super::mfcc::MfccExtractor;
use super::template::WakeTemplate;
use crate::audio::AudioBuffer;
use crate::error::WakeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    /// Start of the matching window, seconds from the stream start.
    pub time_s: f64,
    /// End of the best-matching window.
    pub end_s: f64,
    /// `1 / (1 + DTW distance)`, in (0, 1].
    pub score: f64,
    pub template_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub hop_s: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    pub refractory_s: f64,
    /// Windows whose shortest span is quieter than this (dBFS RMS) are not
    /// scored at all, so digital silence never produces an event.
    pub activity_gate_dbfs: f64,
    /// Leave the energy coefficient c0 out of the frame distance so that a
    /// louder or quieter talker matches the same template.
    pub ignore_c0: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            hop_s: 0.1,
            min_scale: 0.5,
            max_scale: 1.5,
            refractory_s: 0.5,
            activity_gate_dbfs: -60.0,
            ignore_c0: true,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<(), WakeError> {
        if !(self.hop_s > 0.0
            && self.min_scale > 0.0
            && self.max_scale >= self.min_scale
            && self.refractory_s >= 0.0)
        {
            return Err(WakeError::InvalidConfig(
                "detector hop, scales and refractory must be positive and ordered".into(),
            ));
        }
        Ok(())
    }
}

/// A pluggable wake-word engine. `peaks` returns every candidate that
/// survives refractory suppression; callers threshold the scores.
pub trait WakeEngine {
    fn name(&self) -> &str;
    fn peaks(&self, stream: &AudioBuffer) -> Result<Vec<DetectionEvent>, WakeError>;
    /// Shortest stream the engine accepts, in samples.
    fn min_stream_len(&self) -> usize;
}

/// The template/DTW engine.
#[derive(Debug, Clone)]
pub struct DtwSpotter {
    template: WakeTemplate,
    config: DetectConfig,
    extractor: MfccExtractor,
}

impl DtwSpotter {
    pub fn new(template: WakeTemplate, config: DetectConfig) -> Result<Self, WakeError> {
        template.validate()?;
        config.validate()?;
        let extractor = MfccExtractor::new(&template.mfcc, template.sample_rate)?;
        Ok(Self {
            template,
            config,
            extractor,
        })
    }

    pub fn template(&self) -> &WakeTemplate {
        &self.template
    }

    /// Best score and window length (frames) per candidate start frame,
    /// `None` where the window is gated out.
    pub fn score_trace(
        &self,
        stream: &AudioBuffer,
    ) -> Result<Vec<(usize, Option<(f64, usize)>)>, WakeError> {
        let samples = self.check_stream(stream)?;
        let feats = self.extractor.extract(samples)?;
        let hop = self.extractor.hop();
        let fs = self.template.sample_rate as f64;
        let start_step = ((self.config.hop_s * fs / hop as f64).round() as usize).max(1);
        let gate = crate::audio::db_to_gain(self.config.activity_gate_dbfs);
        let n = feats.len();

        let skip = usize::from(self.config.ignore_c0);
        // Frame cost of every exemplar frame against every stream frame.
        let costs: Vec<Vec<Vec<f64>>> = self
            .template
            .exemplars
            .iter()
            .map(|ex| {
                ex.iter()
                    .map(|e| {
                        feats
                            .iter()
                            .map(|f| frame_cost(&e[skip..], &f[skip..]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let spans: Vec<(usize, usize)> = self
            .template
            .exemplars
            .iter()
            .map(|ex| {
                let lo = ((ex.len() as f64 * self.config.min_scale).ceil() as usize).max(1);
                let hi = ((ex.len() as f64 * self.config.max_scale).floor() as usize).max(lo);
                (lo, hi)
            })
            .collect();
        let shortest = spans.iter().map(|s| s.0).min().unwrap_or(1);
        let gate_len = (shortest - 1) * hop + self.extractor.window_len();

        let mut trace = Vec::new();
        let mut s = 0;
        while s + shortest <= n {
            let seg = &samples[s * hop..(s * hop + gate_len).min(samples.len())];
            let active = crate::audio::rms(seg) >= gate;
            let mut best: Option<(f64, usize)> = None;
            if active {
                for (cost, &(lo, hi)) in costs.iter().zip(&spans) {
                    if s + lo > n {
                        continue;
                    }
                    let cols = hi.min(n - s);
                    let end = dtw_end_row(cost.len(), cols, |i, j| cost[i][s + j]);
                    for (j, acc) in end.iter().enumerate().take(cols).skip(lo - 1) {
                        let d = acc.normalized();
                        if best.is_none_or(|(b, _)| d < b) {
                            best = Some((d, j + 1));
                        }
                    }
                }
            }
            trace.push((s, best.map(|(d, len)| (1.0 / (1.0 + d), len))));
            s += start_step;
        }
        Ok(trace)
    }

    fn check_stream<'a>(&self, stream: &'a AudioBuffer) -> Result<&'a [f64], WakeError> {
        if stream.sample_rate() != self.template.sample_rate {
            return Err(crate::error::AudioError::RateMismatch {
                expected: self.template.sample_rate,
                found: stream.sample_rate(),
            }
            .into());
        }
        if stream.num_channels() != 1 {
            return Err(WakeError::InvalidConfig(format!(
                "expected mono stream, got {} channels",
                stream.num_channels()
            )));
        }
        if stream.len() < self.min_stream_len() {
            return Err(WakeError::StreamTooShort {
                stream: stream.len(),
                template: self.min_stream_len(),
            });
        }
        Ok(stream.channel(0))
    }
}

impl WakeEngine for DtwSpotter {
    fn name(&self) -> &str {
        &self.template.name
    }

    fn min_stream_len(&self) -> usize {
        (self.template.min_frames().max(1) - 1) * self.extractor.hop() + self.extractor.window_len()
    }

    fn peaks(&self, stream: &AudioBuffer) -> Result<Vec<DetectionEvent>, WakeError> {
        let trace = self.score_trace(stream)?;
        let hop = self.extractor.hop();
        let fs = self.template.sample_rate as f64;
        let refractory = (self.config.refractory_s * fs / hop as f64).round() as usize;
        let mut cands: Vec<(usize, f64, usize)> = trace
            .into_iter()
            .filter_map(|(s, v)| v.map(|(v, len)| (s, v, len)))
            .collect();
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut kept: Vec<(usize, f64, usize)> = Vec::new();
        for c in cands {
            if kept.iter().all(|k| k.0.abs_diff(c.0) >= refractory) {
                kept.push(c);
            }
        }
        kept.sort_by_key(|k| k.0);
        let win = self.extractor.window_len();
        Ok(kept
            .into_iter()
            .map(|(s, score, len)| DetectionEvent {
                time_s: (s * hop) as f64 / fs,
                end_s: ((s + len - 1) * hop + win) as f64 / fs,
                score,
                template_name: self.template.name.clone(),
            })
            .collect())
    }
}

/// Events on `stream` with score at least `threshold`.
pub fn detect_stream(
    stream: &AudioBuffer,
    template: &WakeTemplate,
    threshold: f64,
    config: &DetectConfig,
) -> Result<Vec<DetectionEvent>, WakeError> {
    let spotter = DtwSpotter::new(template.clone(), config.clone())?;
    Ok(spotter
        .peaks(stream)?
        .into_iter()
        .filter(|e| e.score >= threshold)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, Variation, WordPattern};
    use crate::wakeword::{enroll_template, MfccConfig};

    fn take(seed: u64) -> Vec<f64> {
        WordPattern::wake_word().render(&Variation::random(seed), 16000)
    }

    fn template() -> WakeTemplate {
        let utts: Vec<_> = (1..=3)
            .map(|s| AudioBuffer::mono(take(s), 16000).unwrap())
            .collect();
        enroll_template("alexa", &utts, &MfccConfig::default()).unwrap()
    }

    fn mono(x: Vec<f64>) -> AudioBuffer {
        AudioBuffer::mono(x, 16000).unwrap()
    }

    #[test]
    fn self_detection_scores_one() {
        let t = template();
        let ev = detect_stream(&mono(take(2)), &t, 0.99, &DetectConfig::default()).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].score, 1.0);
        assert_eq!(ev[0].time_s, 0.0);
        // An exact match spans the whole take.
        let len = take(2).len() as f64 / 16000.0;
        assert!(
            (ev[0].end_s - len).abs() <= 0.01,
            "end {} vs {len}",
            ev[0].end_s
        );
    }

    #[test]
    fn level_changes_only_matter_with_c0() {
        // Scaling moves only c0, so an attenuated exemplar still matches
        // exactly once c0 is left out of the distance.
        let quiet: Vec<f64> = take(2).iter().map(|v| v * 0.3).collect();
        let best = |ignore_c0| {
            let cfg = DetectConfig {
                ignore_c0,
                ..Default::default()
            };
            let peaks = DtwSpotter::new(template(), cfg)
                .unwrap()
                .peaks(&mono(quiet.clone()))
                .unwrap();
            peaks.iter().map(|p| p.score).fold(0.0, f64::max)
        };
        assert!(best(true) > 1.0 - 1e-9);
        assert!(best(false) < 0.5);
    }

    #[test]
    fn silence_never_fires() {
        let ev = detect_stream(
            &mono(vec![0.0; 16000 * 5]),
            &template(),
            1e-12,
            &DetectConfig::default(),
        )
        .unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn embedded_exemplar_found_once_at_two_seconds() {
        let x = synth::embed(16000 * 5, &take(1), 32000);
        let ev = detect_stream(&mono(x), &template(), 0.5, &DetectConfig::default()).unwrap();
        assert_eq!(ev.len(), 1, "{ev:?}");
        assert!((ev[0].time_s - 2.0).abs() <= 0.25);
        let end = 2.0 + take(1).len() as f64 / 16000.0;
        assert!(
            (ev[0].end_s - end).abs() <= 0.25,
            "end {} vs {end}",
            ev[0].end_s
        );
    }

    #[test]
    fn above_one_never_fires() {
        let x = synth::embed(16000 * 3, &take(1), 8000);
        let ev =
            detect_stream(&mono(x), &template(), 1.0 + 1e-9, &DetectConfig::default()).unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn too_short_stream() {
        assert!(matches!(
            detect_stream(
                &mono(vec![0.1; 1000]),
                &template(),
                0.5,
                &DetectConfig::default()
            ),
            Err(WakeError::StreamTooShort { .. })
        ));
    }

    #[test]
    fn refractory_separates_peaks() {
        let mut x = synth::embed(16000 * 6, &take(4), 16000);
        for (o, v) in x.iter_mut().skip(16000 * 3).zip(take(5)) {
            *o += v;
        }
        let peaks = DtwSpotter::new(template(), DetectConfig::default())
            .unwrap()
            .peaks(&mono(x))
            .unwrap();
        for w in peaks.windows(2) {
            assert!(w[1].time_s - w[0].time_s >= 0.5 - 1e-9);
        }
        for e in &peaks {
            assert!(e.score > 0.0 && e.score <= 1.0);
        }
    }
}
