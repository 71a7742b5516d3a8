//! Exhaustive check of the state machine over short event sequences.
//!
//! Every sequence of up to `max_len` symbols is replayed through [`step`] and
//! compared against a direct model of the gating rule: a wake word starts a
//! stream iff nothing is streaming and either the gate is off or a matching
//! face was seen no more than `auth_ttl_s` earlier. The comparison covers
//! both safety (no stream without a recent match) and liveness (a recent
//! match plus a wake always streams).

use serde::Serialize;

use super::state::{step, Action, Event, SessionConfig, SessionState};
use crate::error::SessionError;
use crate::face::{AuthEvent, NoMatchCause};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    FaceMatch,
    FaceNonmatch,
    Wake,
    EndOfSpeech,
    /// Jumps past the authentication lifetime.
    TickExpiry,
}

pub const ALPHABET: [Symbol; 5] = [
    Symbol::FaceMatch,
    Symbol::FaceNonmatch,
    Symbol::Wake,
    Symbol::EndOfSpeech,
    Symbol::TickExpiry,
];

/// Spacing of ordinary events.
const STEP_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyReport {
    pub gate_enabled: bool,
    pub max_len: usize,
    pub sequences: u64,
    pub transitions: u64,
    pub streams_started: u64,
    /// First few counterexamples, as symbol sequences.
    pub violations: Vec<Vec<Symbol>>,
    pub violation_count: u64,
}

impl SafetyReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Reference model of the gating rule.
#[derive(Debug, Clone, Copy)]
struct Model {
    last_match: Option<f64>,
    streaming_since: Option<f64>,
}

impl Model {
    /// Returns whether this event must start a stream.
    fn apply(&mut self, sym: Symbol, t: f64, config: &SessionConfig) -> bool {
        if self
            .streaming_since
            .is_some_and(|w| t > w + config.max_utterance_s)
        {
            self.streaming_since = None;
        }
        match sym {
            Symbol::FaceMatch => self.last_match = Some(t),
            Symbol::EndOfSpeech => self.streaming_since = None,
            Symbol::Wake if self.streaming_since.is_none() => {
                let recent = self.last_match.is_some_and(|m| t - m <= config.auth_ttl_s);
                if !config.gate_enabled || recent {
                    self.streaming_since = Some(t);
                    return true;
                }
            }
            _ => {}
        }
        false
    }
}

fn event_for(sym: Symbol, t: f64, config: &SessionConfig) -> Event {
    match sym {
        Symbol::FaceMatch => Event::FaceObserved {
            t,
            auth: AuthEvent::Granted {
                identity: "owner".into(),
                distance: 0.1,
            },
        },
        Symbol::FaceNonmatch => Event::FaceObserved {
            t,
            auth: AuthEvent::Denied {
                best_distance: Some(config.face_threshold + 0.5),
                cause: NoMatchCause::AboveThreshold,
            },
        },
        Symbol::Wake => Event::WakeDetected { t, score: 1.0 },
        Symbol::EndOfSpeech => Event::EndOfSpeech { t },
        Symbol::TickExpiry => Event::Tick { t },
    }
}

fn advance(sym: Symbol, t: f64, config: &SessionConfig) -> f64 {
    match sym {
        Symbol::TickExpiry => t + config.auth_ttl_s + 1.0,
        _ => t + STEP_S,
    }
}

/// Checks all `sum_{k<=max_len} 5^k` sequences by depth-first search.
pub fn enumerate_safety(
    config: &SessionConfig,
    max_len: usize,
) -> Result<SafetyReport, SessionError> {
    config.validate()?;
    let mut report = SafetyReport {
        gate_enabled: config.gate_enabled,
        max_len,
        sequences: 0,
        transitions: 0,
        streams_started: 0,
        violations: Vec::new(),
        violation_count: 0,
    };
    let mut prefix = Vec::with_capacity(max_len);
    let model = Model {
        last_match: None,
        streaming_since: None,
    };
    dfs(
        &SessionState::new(config),
        model,
        0.0,
        config,
        max_len,
        &mut prefix,
        &mut report,
    )?;
    Ok(report)
}

fn dfs(
    state: &SessionState,
    model: Model,
    t: f64,
    config: &SessionConfig,
    remaining: usize,
    prefix: &mut Vec<Symbol>,
    report: &mut SafetyReport,
) -> Result<(), SessionError> {
    report.sequences += 1;
    if remaining == 0 {
        return Ok(());
    }
    for sym in ALPHABET {
        let t_next = advance(sym, t, config);
        let (next, actions) = step(state, &event_for(sym, t_next, config), config)?;
        let mut m = model;
        let expected = m.apply(sym, t_next, config);
        let started = actions
            .iter()
            .any(|a| matches!(a, Action::StreamStarted { .. }));
        report.transitions += 1;
        report.streams_started += started as u64;
        prefix.push(sym);
        if started != expected {
            report.violation_count += 1;
            if report.violations.len() < 10 {
                report.violations.push(prefix.clone());
            }
        }
        dfs(&next, m, t_next, config, remaining - 1, prefix, report)?;
        prefix.pop();
    }
    Ok(())
}
