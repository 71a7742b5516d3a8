//! Core engine for a face-gated smart speaker: synthetic array scenes, the
//! microphone-array DSP front-end, template wake-word spotting with ROC
//! evaluation, face-embedding authentication and the session state machine
//! that ties them together.

// Parameter checks are written `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod config;
pub mod dsp;
pub mod error;
pub mod face;
pub mod scene;
pub mod session;
pub mod signal;
pub mod stft;
pub mod synth;
pub mod wakeword;

pub use audio::{read_wav, write_wav, AudioBuffer, BitDepth, CANONICAL_RATE};
pub use config::RunConfig;
pub use error::{
    AudioError, ConfigError, DspError, FaceError, SceneError, SessionError, WakeError,
};
pub use scene::{simulate_scene, ArrayGeometry, SceneOutput, SceneSpec, SourceSpec};
pub use stft::{istft, stft, Spectrogram};
