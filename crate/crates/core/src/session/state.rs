//! The face-gated wake state machine.
//!
//! ```text
//! IDLE --face match--> AUTHENTICATED --wake--> STREAMING
//!  ^  \--wake (gate off)---------------------------^  |
//!  |                    ^----end of speech / max length-/
//!  \--- auth expiry ---/
//! ```
//!
//! Expiry is evaluated lazily: every event first drops an authentication
//! whose expiry lies strictly before the event time.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::SessionError;
use crate::face::AuthEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub auth_ttl_s: f64,
    pub pre_roll_s: f64,
    /// Wake detections scoring below this are ignored.
    pub wake_threshold: f64,
    pub face_threshold: f64,
    /// Off reproduces a regular, ungated speaker.
    pub gate_enabled: bool,
    pub max_utterance_s: f64,
    pub sample_rate: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            auth_ttl_s: 30.0,
            pre_roll_s: 0.5,
            wake_threshold: 0.2,
            face_threshold: crate::face::DEFAULT_MATCH_THRESHOLD,
            gate_enabled: true,
            max_utterance_s: 8.0,
            sample_rate: crate::audio::CANONICAL_RATE,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.auth_ttl_s) && pos(self.pre_roll_s) && pos(self.max_utterance_s)) {
            return Err(SessionError::InvalidConfig(
                "durations must be positive".into(),
            ));
        }
        if !(pos(self.wake_threshold) && pos(self.face_threshold)) || self.sample_rate == 0 {
            return Err(SessionError::InvalidConfig(
                "thresholds and sample rate must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn pre_roll_samples(&self) -> usize {
        (self.pre_roll_s * self.sample_rate as f64).round() as usize
    }

    pub fn max_utterance_samples(&self) -> usize {
        (self.max_utterance_s * self.sample_rate as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Idle,
    Authenticated,
    Streaming,
}

/// Session input. Face crops are resolved to an [`AuthEvent`] by the caller
/// (embed, recognise, gate) so that `step` stays a pure function.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    FaceObserved {
        t: f64,
        auth: AuthEvent,
    },
    WakeDetected {
        t: f64,
        score: f64,
    },
    /// Samples that became available at time `t` (the end of the chunk).
    AudioChunk {
        t: f64,
        samples: Vec<f64>,
    },
    EndOfSpeech {
        t: f64,
    },
    Tick {
        t: f64,
    },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::FaceObserved { t, .. }
            | Event::WakeDetected { t, .. }
            | Event::AudioChunk { t, .. }
            | Event::EndOfSpeech { t }
            | Event::Tick { t } => *t,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Event::FaceObserved { .. } => "face_observed",
            Event::WakeDetected { .. } => "wake_detected",
            Event::AudioChunk { .. } => "audio_chunk",
            Event::EndOfSpeech { .. } => "end_of_speech",
            Event::Tick { .. } => "tick",
        }
    }
}

/// Why an utterance ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    EndOfSpeech,
    MaxLength,
}

/// A finished utterance handed to the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub audio: AudioBuffer,
    pub identity: Option<String>,
    pub wake_t: f64,
    /// Stream sample index of the first (pre-roll) sample.
    pub start_sample: u64,
    pub pre_roll_samples: usize,
    pub reason: EndReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    RingGreen,
    RingOff,
    Granted {
        identity: String,
    },
    Denied {
        best_distance: Option<f64>,
    },
    AuthRefreshed {
        identity: String,
    },
    AuthExpired,
    Blocked {
        reason: &'static str,
    },
    StreamStarted {
        identity: Option<String>,
    },
    #[serde(serialize_with = "ser_utterance")]
    UtteranceEmitted(Utterance),
    WakeIgnored {
        reason: &'static str,
    },
}

fn ser_utterance<S: serde::Serializer>(u: &Utterance, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Utterance", 5)?;
    st.serialize_field("samples", &u.audio.len())?;
    st.serialize_field("identity", &u.identity)?;
    st.serialize_field("wake_t", &u.wake_t)?;
    st.serialize_field("start_sample", &u.start_sample)?;
    st.serialize_field("reason", &u.reason)?;
    st.end()
}

/// The last `capacity` samples of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RingBuffer {
    capacity: usize,
    data: VecDeque<f64>,
}

impl RingBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            data: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, samples: &[f64]) {
        let skip = samples.len().saturating_sub(self.capacity);
        for &s in &samples[skip..] {
            if self.data.len() == self.capacity {
                self.data.pop_front();
            }
            self.data.push_back(s);
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_warm(&self) -> bool {
        self.data.len() == self.capacity
    }

    pub fn contents(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ActiveUtterance {
    pre_roll: Vec<f64>,
    live: Vec<f64>,
    wake_t: f64,
    start_sample: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub phase: Phase,
    pub identity: Option<String>,
    pub auth_expiry: Option<f64>,
    pub ring: RingBuffer,
    /// Samples received so far.
    pub stream_samples: u64,
    last_t: Option<f64>,
    active: Option<ActiveUtterance>,
}

impl SessionState {
    pub fn new(config: &SessionConfig) -> Self {
        Self {
            phase: Phase::Idle,
            identity: None,
            auth_expiry: None,
            ring: RingBuffer::new(config.pre_roll_samples()),
            stream_samples: 0,
            last_t: None,
            active: None,
        }
    }

    pub fn last_time(&self) -> Option<f64> {
        self.last_t
    }

    /// Pre-roll followed by the first `end_mark` live samples (clamped to
    /// what has arrived).
    pub fn assemble_utterance(
        &self,
        end_mark: usize,
        sample_rate: u32,
    ) -> Result<AudioBuffer, SessionError> {
        let a = self
            .active
            .as_ref()
            .filter(|_| self.phase == Phase::Streaming)
            .ok_or(SessionError::NotStreaming)?;
        Ok(assemble(
            &a.pre_roll,
            &a.live[..end_mark.min(a.live.len())],
            sample_rate,
        )?)
    }

    /// Applies one event in place.
    pub fn handle(
        &mut self,
        event: &Event,
        config: &SessionConfig,
    ) -> Result<Vec<Action>, SessionError> {
        let t = event.time();
        if !t.is_finite() {
            return Err(SessionError::BadTimestamp);
        }
        if let Some(last) = self.last_t {
            if t < last {
                return Err(SessionError::OutOfOrder { last, found: t });
            }
        }
        self.last_t = Some(t);
        let mut actions = Vec::new();

        // Utterance length cap, then lazy expiry.
        if self.phase == Phase::Streaming {
            if let Some(a) = &self.active {
                if t > a.wake_t + config.max_utterance_s {
                    self.finish(EndReason::MaxLength, config, &mut actions)?;
                }
            }
        }
        if self.phase == Phase::Authenticated && self.auth_expiry.is_some_and(|e| t > e) {
            self.phase = Phase::Idle;
            self.identity = None;
            self.auth_expiry = None;
            actions.push(Action::AuthExpired);
            actions.push(Action::RingOff);
        }

        match event {
            Event::FaceObserved { auth, .. } => match auth {
                AuthEvent::Granted { identity, .. } => {
                    self.identity = Some(identity.clone());
                    self.auth_expiry = Some(t + config.auth_ttl_s);
                    match self.phase {
                        Phase::Idle => {
                            self.phase = Phase::Authenticated;
                            actions.push(Action::Granted {
                                identity: identity.clone(),
                            });
                            actions.push(Action::RingGreen);
                        }
                        _ => actions.push(Action::AuthRefreshed {
                            identity: identity.clone(),
                        }),
                    }
                }
                AuthEvent::Denied { best_distance, .. } => actions.push(Action::Denied {
                    best_distance: *best_distance,
                }),
            },
            Event::WakeDetected { score, .. } => {
                if *score < config.wake_threshold {
                    actions.push(Action::WakeIgnored {
                        reason: "below_threshold",
                    });
                } else {
                    match self.phase {
                        Phase::Streaming => actions.push(Action::WakeIgnored {
                            reason: "already_streaming",
                        }),
                        Phase::Idle if config.gate_enabled => actions.push(Action::Blocked {
                            reason: "no_authenticated_face",
                        }),
                        Phase::Idle | Phase::Authenticated => {
                            let pre_roll = self.ring.contents();
                            self.active = Some(ActiveUtterance {
                                start_sample: self.stream_samples - pre_roll.len() as u64,
                                pre_roll,
                                live: Vec::new(),
                                wake_t: t,
                            });
                            self.phase = Phase::Streaming;
                            actions.push(Action::StreamStarted {
                                identity: self.identity.clone(),
                            });
                        }
                    }
                }
            }
            Event::AudioChunk { samples, .. } => {
                if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
                    return Err(crate::error::AudioError::NonFinite { channel: 0, index }.into());
                }
                self.ring.push(samples);
                self.stream_samples += samples.len() as u64;
                if let Some(a) = self.active.as_mut() {
                    let room = config.max_utterance_samples().saturating_sub(a.live.len());
                    a.live
                        .extend_from_slice(&samples[..samples.len().min(room)]);
                    if a.live.len() >= config.max_utterance_samples() {
                        self.finish(EndReason::MaxLength, config, &mut actions)?;
                    }
                }
            }
            Event::EndOfSpeech { .. } => {
                if self.phase == Phase::Streaming {
                    self.finish(EndReason::EndOfSpeech, config, &mut actions)?;
                }
            }
            Event::Tick { .. } => {}
        }
        Ok(actions)
    }

    fn finish(
        &mut self,
        reason: EndReason,
        config: &SessionConfig,
        actions: &mut Vec<Action>,
    ) -> Result<(), SessionError> {
        let Some(a) = self.active.take() else {
            return Ok(());
        };
        let audio = assemble(&a.pre_roll, &a.live, config.sample_rate)?;
        actions.push(Action::UtteranceEmitted(Utterance {
            audio,
            identity: self.identity.clone(),
            wake_t: a.wake_t,
            start_sample: a.start_sample,
            pre_roll_samples: a.pre_roll.len(),
            reason,
        }));
        self.phase = if self.identity.is_some() {
            Phase::Authenticated
        } else {
            Phase::Idle
        };
        Ok(())
    }
}

fn assemble(
    pre_roll: &[f64],
    live: &[f64],
    sample_rate: u32,
) -> Result<AudioBuffer, crate::error::AudioError> {
    let mut x = Vec::with_capacity(pre_roll.len() + live.len());
    x.extend_from_slice(pre_roll);
    x.extend_from_slice(live);
    AudioBuffer::mono(x, sample_rate)
}

/// Pure transition: the next state and the actions taken.
pub fn step(
    state: &SessionState,
    event: &Event,
    config: &SessionConfig,
) -> Result<(SessionState, Vec<Action>), SessionError> {
    let mut next = state.clone();
    let actions = next.handle(event, config)?;
    Ok((next, actions))
}

/// One audit line: `{t, event, phase_before, phase_after, actions}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub event: &'static str,
    pub phase_before: Phase,
    pub phase_after: Phase,
    pub actions: Vec<Action>,
}

impl TraceRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace record serialises")
    }
}
