//! Scripted attack scenarios replayed through the session state machine.
//!
//! A script places face sightings and audio clips on a timeline. The runner
//! mixes the clips into one continuous ch0 stream, runs the wake-word engine
//! over it, resolves every face through embed -> recognise -> gate, and feeds
//! the merged, time-ordered events to the session in 100 ms audio chunks. An
//! energy endpointer closes utterances. A scenario is *allowed* if the
//! session ever starts streaming.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::endpoint::Endpointer;
use super::state::{Action, Event, Phase, SessionConfig, SessionState, TraceRecord, Utterance};
use crate::audio::{db_to_gain, read_wav, AudioBuffer};
use crate::error::SessionError;
use crate::face::{
    enroll, gate_decision, random_image, recognize, synthetic_face, AuthEvent, EnrollmentDb,
    FaceEmbedder, FaceImage, ProjectionEmbedder,
};
use crate::synth::{self, Variation, WordPattern};
use crate::wakeword::{
    enroll_template, DetectConfig, DetectionEvent, DtwSpotter, MfccConfig, WakeEngine,
};

pub const CHUNK_S: f64 = 0.1;
pub const TICK_S: f64 = 1.0;
/// Level of the always-present background in scenario streams.
pub const STREAM_FLOOR_DBFS: f64 = -65.0;
pub const OWNER: &str = "owner";
/// Synthetic face identity of the enrolled owner.
pub const OWNER_FACE: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    File { path: PathBuf },
    Synthetic { identity: u64, take: u64 },
    Random { seed: u64 },
}

/// A synthetic spoken request: the wake word followed by a short command,
/// both rendered with one speaker's variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtteranceSpec {
    pub speaker_seed: u64,
    pub pitch_scale: f64,
    pub formant_scale: f64,
    pub tempo_scale: f64,
    pub level_db: f64,
    /// Moves every partial up by this much (inaudible-band injection).
    pub shift_hz: f64,
    /// Number of decoy words forming the command after the wake word.
    pub command_words: u32,
    pub noise_dbfs: Option<f64>,
    pub babble_dbfs: Option<f64>,
}

impl Default for UtteranceSpec {
    fn default() -> Self {
        Self {
            speaker_seed: 0,
            pitch_scale: 1.0,
            formant_scale: 1.0,
            tempo_scale: 1.0,
            level_db: 0.0,
            shift_hz: 0.0,
            command_words: 3,
            noise_dbfs: None,
            babble_dbfs: None,
        }
    }
}

impl UtteranceSpec {
    pub fn render(&self, sample_rate: u32) -> Vec<f64> {
        let mut v = Variation::random(self.speaker_seed);
        v.pitch_scale *= self.pitch_scale;
        v.formant_scale *= self.formant_scale;
        v.tempo_scale *= self.tempo_scale;
        v.level_db += self.level_db;
        let gap = vec![0.0; (0.15 * sample_rate as f64) as usize];
        let mut x = WordPattern::wake_word().render_shifted(&v, self.shift_hz, sample_rate);
        for k in 0..self.command_words as u64 {
            x.extend_from_slice(&gap);
            let word = WordPattern::decoy(self.speaker_seed.wrapping_mul(31).wrapping_add(k));
            x.extend(word.render_shifted(&v, self.shift_hz, sample_rate));
        }
        if let Some(db) = self.noise_dbfs {
            let noise = synth::white_noise(x.len(), db_to_gain(db), self.speaker_seed, 700);
            for (o, n) in x.iter_mut().zip(noise) {
                *o += n;
            }
        }
        if let Some(db) = self.babble_dbfs {
            let b = synth::speech_like(
                x.len(),
                db_to_gain(db),
                self.speaker_seed ^ 0xBABB,
                sample_rate,
            );
            for (o, n) in x.iter_mut().zip(b) {
                *o += n;
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum AudioSource {
    File { path: PathBuf },
    Utterance(UtteranceSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptEvent {
    Face { t: f64, image: ImageSource },
    Audio { t: f64, audio: AudioSource },
}

/// A named event script, stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Whether the scenario is an attack (expected blocked with the gate on)
    /// or a legitimate control interaction.
    #[serde(default = "yes")]
    pub attack: bool,
    pub duration_s: f64,
    #[serde(rename = "event", default)]
    pub events: Vec<ScriptEvent>,
}

fn yes() -> bool {
    true
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        let s: ScenarioScript =
            toml::from_str(text).map_err(|e| SessionError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SessionError::Scenario(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::Scenario(m));
        if self.id.is_empty() {
            return bad("empty scenario id".into());
        }
        if !(self.duration_s > 0.0 && self.duration_s <= 600.0) {
            return bad(format!("duration {} outside (0, 600] s", self.duration_s));
        }
        for e in &self.events {
            let t = match e {
                ScriptEvent::Face { t, .. } | ScriptEvent::Audio { t, .. } => *t,
            };
            if !(t >= 0.0 && t < self.duration_s) {
                return bad(format!("event time {t} outside [0, {})", self.duration_s));
            }
        }
        Ok(())
    }
}

/// The seven attacks plus one legitimate control interaction.
pub fn builtin_scenarios() -> Vec<ScenarioScript> {
    let face = |t: f64, image: ImageSource| ScriptEvent::Face { t, image };
    let speak = |t: f64, u: UtteranceSpec| ScriptEvent::Audio {
        t,
        audio: AudioSource::Utterance(u),
    };
    let script =
        |id: &str, name: &str, description: &str, events: Vec<ScriptEvent>| ScenarioScript {
            id: id.into(),
            name: name.into(),
            description: description.into(),
            attack: true,
            duration_s: 8.0,
            events,
        };
    vec![
        script(
            "a",
            "curious child",
            "An unenrolled child looks at the speaker and says the wake word in a higher voice.",
            vec![
                face(
                    0.5,
                    ImageSource::Synthetic {
                        identity: 901,
                        take: 0,
                    },
                ),
                speak(
                    1.0,
                    UtteranceSpec {
                        speaker_seed: 901,
                        pitch_scale: 1.1,
                        formant_scale: 1.03,
                        ..Default::default()
                    },
                ),
            ],
        ),
        script(
            "b",
            "mischievous neighbour (inaudible band)",
            "Wake word and command shifted into the 6-8 kHz band; nobody in view.",
            vec![speak(
                1.0,
                UtteranceSpec {
                    speaker_seed: 902,
                    shift_hz: 6000.0,
                    ..Default::default()
                },
            )],
        ),
        script(
            "c",
            "parrot",
            "A bird imitates the wake word; the camera sees no human face.",
            vec![
                face(0.5, ImageSource::Random { seed: 903 }),
                speak(
                    1.0,
                    UtteranceSpec {
                        speaker_seed: 903,
                        pitch_scale: 1.08,
                        formant_scale: 1.04,
                        tempo_scale: 0.95,
                        ..Default::default()
                    },
                ),
            ],
        ),
        script(
            "d",
            "talking television",
            "A broadcast says the wake word over programme babble; nobody in view.",
            vec![speak(
                1.0,
                UtteranceSpec {
                    speaker_seed: 914,
                    babble_dbfs: Some(-40.0),
                    ..Default::default()
                },
            )],
        ),
        script(
            "e",
            "physical access",
            "A visitor with physical access looks at the speaker and speaks.",
            vec![
                face(
                    0.5,
                    ImageSource::Synthetic {
                        identity: 905,
                        take: 0,
                    },
                ),
                speak(
                    1.0,
                    UtteranceSpec {
                        speaker_seed: 905,
                        ..Default::default()
                    },
                ),
            ],
        ),
        script(
            "f",
            "replayed owner voice",
            "A recording of the owner saying the wake word is replayed; nobody in view.",
            vec![speak(
                1.0,
                UtteranceSpec {
                    speaker_seed: OWNER_VOICE + 4,
                    noise_dbfs: Some(-50.0),
                    ..Default::default()
                },
            )],
        ),
        script(
            "g",
            "malicious embedded command",
            "A garbled, noisy rendering of the wake word inside an advert; nobody in view.",
            vec![speak(
                1.0,
                UtteranceSpec {
                    speaker_seed: 907,
                    tempo_scale: 1.04,
                    noise_dbfs: Some(-40.0),
                    ..Default::default()
                },
            )],
        ),
        ScenarioScript {
            attack: false,
            ..script(
                "control",
                "owner interaction",
                "The enrolled owner looks at the speaker, then says the wake word.",
                vec![
                    face(
                        0.5,
                        ImageSource::Synthetic {
                            identity: OWNER_FACE,
                            take: 9,
                        },
                    ),
                    speak(
                        1.0,
                        UtteranceSpec {
                            speaker_seed: OWNER_VOICE + 8,
                            ..Default::default()
                        },
                    ),
                ],
            )
        },
    ]
}

/// Seed of the owner's enrollment takes of the wake word.
pub const OWNER_VOICE: u64 = 100;
pub const OWNER_ENROLL_TAKES: u64 = 3;

/// Everything a scenario run needs besides the script.
pub struct ScenarioEnv {
    pub session: SessionConfig,
    pub embedder: Box<dyn FaceEmbedder + Send + Sync>,
    pub db: EnrollmentDb,
    pub engine: Box<dyn WakeEngine + Send + Sync>,
    /// Relative payload paths resolve against this directory.
    pub base_dir: PathBuf,
}

impl std::fmt::Debug for ScenarioEnv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioEnv")
            .field("session", &self.session)
            .field("db", &self.db.num_embeddings())
            .finish()
    }
}

impl ScenarioEnv {
    /// The owner enrolled from synthetic face takes 0-2 and voice takes
    /// `OWNER_VOICE..OWNER_VOICE + 3`.
    pub fn synthetic(embedder_seed: u64, session: SessionConfig) -> Result<Self, SessionError> {
        Self::synthetic_with(
            embedder_seed,
            session,
            &MfccConfig::default(),
            &DetectConfig::default(),
        )
    }

    pub fn synthetic_with(
        embedder_seed: u64,
        session: SessionConfig,
        mfcc: &MfccConfig,
        detect: &DetectConfig,
    ) -> Result<Self, SessionError> {
        let embedder = ProjectionEmbedder::new(embedder_seed);
        let faces: Vec<FaceImage> = (0..3).map(|t| synthetic_face(OWNER_FACE, t)).collect();
        let db = enroll(
            &EnrollmentDb::new(0, embedder_seed),
            OWNER,
            &faces,
            &embedder,
        )?;
        let takes = (0..OWNER_ENROLL_TAKES)
            .map(|k| {
                AudioBuffer::mono(
                    WordPattern::wake_word()
                        .render(&Variation::random(OWNER_VOICE + k), session.sample_rate),
                    session.sample_rate,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let template = enroll_template("alexa", &takes, mfcc)?;
        let engine = DtwSpotter::new(template, detect.clone())?;
        Ok(Self {
            session,
            embedder: Box::new(embedder),
            db,
            engine: Box::new(engine),
            base_dir: PathBuf::from("."),
        })
    }

    fn resolve_image(&self, src: &ImageSource) -> Result<FaceImage, SessionError> {
        Ok(match src {
            ImageSource::File { path } => FaceImage::load_pgm(&self.base_dir.join(path))?,
            ImageSource::Synthetic { identity, take } => synthetic_face(*identity, *take),
            ImageSource::Random { seed } => random_image(*seed),
        })
    }

    fn resolve_audio(&self, src: &AudioSource) -> Result<Vec<f64>, SessionError> {
        Ok(match src {
            AudioSource::File { path } => {
                let b = read_wav(self.base_dir.join(path))?;
                if b.sample_rate() != self.session.sample_rate {
                    return Err(crate::error::AudioError::RateMismatch {
                        expected: self.session.sample_rate,
                        found: b.sample_rate(),
                    }
                    .into());
                }
                b.channel(0).to_vec()
            }
            AudioSource::Utterance(u) => u.render(self.session.sample_rate),
        })
    }

    pub fn authenticate(&self, image: &FaceImage) -> Result<AuthEvent, SessionError> {
        let emb = self.embedder.embed(image)?;
        Ok(gate_decision(&recognize(
            &self.db,
            &emb,
            self.session.face_threshold,
        )?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Blocked,
    Allowed,
}

/// The layer credited with stopping a blocked scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockingLayer {
    /// A wake word was detected but no authenticated face was present.
    FaceGate,
    /// The wake-word engine never fired.
    WakeDetector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub id: String,
    pub name: String,
    pub attack: bool,
    pub gate_enabled: bool,
    pub outcome: Outcome,
    pub blocked_by: Option<BlockingLayer>,
    pub wake_detections: usize,
    pub best_wake_score: Option<f64>,
    pub face_decisions: Vec<AuthEvent>,
    pub utterances: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
    #[serde(skip)]
    pub emitted: Vec<Utterance>,
}

impl ScenarioOutcome {
    pub fn trace_jsonl(&self) -> String {
        self.trace.iter().map(|r| r.to_json() + "\n").collect()
    }
}

/// Replays `script` through a fresh session.
pub fn run_scenario(
    script: &ScenarioScript,
    env: &ScenarioEnv,
) -> Result<ScenarioOutcome, SessionError> {
    script.validate()?;
    let cfg = &env.session;
    cfg.validate()?;
    let fs = cfg.sample_rate as f64;
    let len = (script.duration_s * fs).round() as usize;
    let mut stream = synth::white_noise(len, db_to_gain(STREAM_FLOOR_DBFS), 0x5CE2, 800);

    // Timeline entries: (time, order, event). Order breaks ties so audio
    // lands before faces, faces before wakes, and ticks come last.
    let mut timeline: Vec<(f64, u8, Event)> = Vec::new();
    let mut face_decisions = Vec::new();
    for e in &script.events {
        match e {
            ScriptEvent::Face { t, image } => {
                let auth = env.authenticate(&env.resolve_image(image)?)?;
                face_decisions.push(auth.clone());
                timeline.push((*t, 1, Event::FaceObserved { t: *t, auth }));
            }
            ScriptEvent::Audio { t, audio } => {
                let clip = env.resolve_audio(audio)?;
                let at = (t * fs).round() as usize;
                for (o, v) in stream.iter_mut().skip(at).zip(&clip) {
                    *o += v;
                }
            }
        }
    }
    let run = replay_stream(&stream, timeline, env.engine.as_ref(), cfg)?;
    let outcome = if run.started {
        Outcome::Allowed
    } else {
        Outcome::Blocked
    };
    let blocked_by = match outcome {
        Outcome::Allowed => None,
        Outcome::Blocked if run.blocked => Some(BlockingLayer::FaceGate),
        Outcome::Blocked => Some(BlockingLayer::WakeDetector),
    };
    Ok(ScenarioOutcome {
        id: script.id.clone(),
        name: script.name.clone(),
        attack: script.attack,
        gate_enabled: cfg.gate_enabled,
        outcome,
        blocked_by,
        wake_detections: run.detections.len(),
        best_wake_score: run.best_wake_score,
        face_decisions,
        utterances: run.emitted.len(),
        trace: run.trace,
        emitted: run.emitted,
    })
}

/// Result of feeding one stream through a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRun {
    pub trace: Vec<TraceRecord>,
    pub emitted: Vec<Utterance>,
    /// Wake peaks at or above the session threshold.
    pub detections: Vec<DetectionEvent>,
    pub best_wake_score: Option<f64>,
    pub started: bool,
    pub blocked: bool,
}

/// Runs `engine` over the whole mono `stream` and replays it through a fresh
/// session together with the face events already in `timeline`.
///
/// Timeline entries are `(time, order, event)`; the order breaks ties so
/// audio (0) lands before faces (1), faces before wakes (2), and ticks (3)
/// come last. Audio arrives in 100 ms chunks stamped with their end time and
/// wake detections fire at the end of the matched window. While streaming,
/// the energy endpointer closes the utterance.
pub fn replay_stream(
    stream: &[f64],
    mut timeline: Vec<(f64, u8, Event)>,
    engine: &dyn WakeEngine,
    cfg: &SessionConfig,
) -> Result<SessionRun, SessionError> {
    let fs = cfg.sample_rate as f64;
    let peaks = engine.peaks(&AudioBuffer::mono(stream.to_vec(), cfg.sample_rate)?)?;
    let detections: Vec<DetectionEvent> = peaks
        .iter()
        .filter(|p| p.score >= cfg.wake_threshold)
        .cloned()
        .collect();
    for p in &detections {
        timeline.push((
            p.end_s,
            2,
            Event::WakeDetected {
                t: p.end_s,
                score: p.score,
            },
        ));
    }
    let chunk = (CHUNK_S * fs).round() as usize;
    for (k, c) in stream.chunks(chunk).enumerate() {
        let t = (k * chunk + c.len()) as f64 / fs;
        timeline.push((
            t,
            0,
            Event::AudioChunk {
                t,
                samples: c.to_vec(),
            },
        ));
    }
    let duration = stream.len() as f64 / fs;
    let mut k = 1;
    while k as f64 * TICK_S <= duration + 1e-9 {
        let t = k as f64 * TICK_S;
        timeline.push((t, 3, Event::Tick { t }));
        k += 1;
    }
    timeline.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut state = SessionState::new(cfg);
    let mut endpointer = Endpointer::new(cfg.sample_rate);
    let mut run = SessionRun {
        trace: Vec::with_capacity(timeline.len()),
        emitted: Vec::new(),
        best_wake_score: peaks.iter().map(|p| p.score).reduce(f64::max),
        detections,
        started: false,
        blocked: false,
    };
    let apply =
        |state: &mut SessionState, ev: &Event, run: &mut SessionRun| -> Result<(), SessionError> {
            let before = state.phase;
            let actions = state.handle(ev, cfg)?;
            for a in &actions {
                match a {
                    Action::StreamStarted { .. } => run.started = true,
                    Action::Blocked { .. } => run.blocked = true,
                    Action::UtteranceEmitted(u) => run.emitted.push(u.clone()),
                    _ => {}
                }
            }
            run.trace.push(TraceRecord {
                t: ev.time(),
                event: ev.kind(),
                phase_before: before,
                phase_after: state.phase,
                actions,
            });
            Ok(())
        };
    for (_, _, ev) in &timeline {
        let was_streaming = state.phase == Phase::Streaming;
        apply(&mut state, ev, &mut run)?;
        if !was_streaming && state.phase == Phase::Streaming {
            endpointer.reset();
        }
        if let Event::AudioChunk { t, samples } = ev {
            if was_streaming
                && state.phase == Phase::Streaming
                && endpointer.push(samples).is_some()
            {
                apply(&mut state, &Event::EndOfSpeech { t: *t }, &mut run)?;
            }
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub gate_enabled: bool,
    pub attacks: usize,
    pub blocked: usize,
    pub allowed: usize,
    pub outcomes: Vec<ScenarioOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub gate_on: SuiteSummary,
    pub gate_off: SuiteSummary,
    /// Every attack blocked with the gate on.
    pub gate_on_all_blocked: bool,
    /// At least all but one attack got through without the gate.
    pub gate_off_baseline_met: bool,
    /// Legitimate control scenarios allowed with the gate on.
    pub controls_allowed: bool,
    pub expectations_met: bool,
}

impl AttackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn run_suite(scripts: &[ScenarioScript], env: &ScenarioEnv) -> Result<SuiteSummary, SessionError> {
    let outcomes = scripts
        .iter()
        .map(|s| run_scenario(s, env))
        .collect::<Result<Vec<_>, _>>()?;
    let attacks: Vec<_> = outcomes.iter().filter(|o| o.attack).collect();
    Ok(SuiteSummary {
        gate_enabled: env.session.gate_enabled,
        attacks: attacks.len(),
        blocked: attacks
            .iter()
            .filter(|o| o.outcome == Outcome::Blocked)
            .count(),
        allowed: attacks
            .iter()
            .filter(|o| o.outcome == Outcome::Allowed)
            .count(),
        outcomes,
    })
}

/// Runs every script under both environments. The gate-off baseline is
/// expected to let through all attacks except at most one.
pub fn run_attack_suite(
    scripts: &[ScenarioScript],
    gate_on: &ScenarioEnv,
    gate_off: &ScenarioEnv,
) -> Result<AttackReport, SessionError> {
    let on = run_suite(scripts, gate_on)?;
    let off = run_suite(scripts, gate_off)?;
    let gate_on_all_blocked = on.blocked == on.attacks;
    let gate_off_baseline_met = off.allowed + 1 >= off.attacks;
    let controls_allowed = on
        .outcomes
        .iter()
        .filter(|o| !o.attack)
        .all(|o| o.outcome == Outcome::Allowed);
    Ok(AttackReport {
        expectations_met: gate_on_all_blocked && gate_off_baseline_met && controls_allowed,
        gate_on: on,
        gate_off: off,
        gate_on_all_blocked,
        gate_off_baseline_met,
        controls_allowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scripts_roundtrip_through_toml() {
        for s in builtin_scenarios() {
            let back = ScenarioScript::parse(&s.to_toml()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn malformed_scripts_rejected() {
        assert!(ScenarioScript::parse("id = \"x\"").is_err());
        assert!(ScenarioScript::parse("id = \"x\"\nname = \"n\"\nduration_s = 5.0\n[[event]]\nkind = \"face\"\nt = 9.0\nimage = { source = \"random\", seed = 1 }").is_err());
        assert!(
            ScenarioScript::parse("id = \"x\"\nname = \"n\"\nduration_s = 5.0\nbogus = 1").is_err()
        );
    }

    #[test]
    fn attack_suite_meets_expectations() {
        let on = ScenarioEnv::synthetic(7, SessionConfig::default()).unwrap();
        let off = ScenarioEnv::synthetic(
            7,
            SessionConfig {
                gate_enabled: false,
                ..Default::default()
            },
        )
        .unwrap();
        let scripts = builtin_scenarios();
        let r = run_attack_suite(&scripts, &on, &off).unwrap();
        assert_eq!(r.gate_on.attacks, 7);
        assert_eq!(r.gate_on.blocked, 7);
        assert!(r.gate_off.allowed >= 6, "{}", r.to_json());
        assert!(r.expectations_met);
        // Named expectations: child blocked (gate on), television allowed
        // (gate off), replay blocked (gate on).
        let find =
            |s: &SuiteSummary, id: &str| s.outcomes.iter().find(|o| o.id == id).unwrap().outcome;
        assert_eq!(find(&r.gate_on, "a"), Outcome::Blocked);
        assert_eq!(find(&r.gate_off, "d"), Outcome::Allowed);
        assert_eq!(find(&r.gate_on, "f"), Outcome::Blocked);
    }

    #[test]
    fn control_emits_utterance_with_identity() {
        let env = ScenarioEnv::synthetic(7, SessionConfig::default()).unwrap();
        let control = builtin_scenarios()
            .into_iter()
            .find(|s| s.id == "control")
            .unwrap();
        let out = run_scenario(&control, &env).unwrap();
        assert_eq!(out.outcome, Outcome::Allowed);
        assert_eq!(out.emitted.len(), 1);
        let u = &out.emitted[0];
        assert_eq!(u.identity.as_deref(), Some(OWNER));
        assert_eq!(u.pre_roll_samples, env.session.pre_roll_samples());
        assert_eq!(u.reason, super::super::state::EndReason::EndOfSpeech);
        // Trace lines are one JSON object each with the audit fields.
        for line in out.trace_jsonl().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for k in ["t", "event", "phase_before", "phase_after", "actions"] {
                assert!(v.get(k).is_some());
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let env = ScenarioEnv::synthetic(7, SessionConfig::default()).unwrap();
        let s = &builtin_scenarios()[0];
        assert_eq!(
            run_scenario(s, &env).unwrap().trace_jsonl(),
            run_scenario(s, &env).unwrap().trace_jsonl()
        );
    }
}
