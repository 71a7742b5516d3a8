//! Face-gated session control: the state machine, ring feedback, the energy
//! endpointer, scripted scenario replay and exhaustive safety checking.

pub mod endpoint;
pub mod feedback;
pub mod safety;
pub mod scenario;
pub mod state;

pub use endpoint::Endpointer;
pub use feedback::{feedback_for, pointer_slot, FeedbackState, LedColor, RING_SLOTS};
pub use safety::{enumerate_safety, SafetyReport, Symbol};
pub use scenario::{
    builtin_scenarios, replay_stream, run_attack_suite, run_scenario, AttackReport, AudioSource,
    BlockingLayer, ImageSource, Outcome, ScenarioEnv, ScenarioOutcome, ScenarioScript, ScriptEvent,
    SessionRun, SuiteSummary, UtteranceSpec, OWNER, OWNER_FACE,
};
pub use state::{
    step, Action, EndReason, Event, Phase, RingBuffer, SessionConfig, SessionState, TraceRecord,
    Utterance,
};
