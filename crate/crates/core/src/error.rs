use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the audio container and WAV I/O layer.
#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    NotFound(PathBuf),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("channel length mismatch: channel {channel} has {len} samples, expected {expected}")]
    RaggedChannels {
        channel: usize,
        len: usize,
        expected: usize,
    },
    #[error("non-finite sample in channel {channel} at index {index}")]
    NonFinite { channel: usize, index: usize },
    #[error("sample rate {found} Hz does not match expected {expected} Hz")]
    RateMismatch { expected: u32, found: u32 },
    #[error("invalid audio parameters: {0}")]
    InvalidParameter(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum StftError {
    #[error("window size {0} must be a power of two")]
    WindowNotPowerOfTwo(usize),
    #[error("hop {hop} must be positive and divide the window size {window}")]
    BadHop { window: usize, hop: usize },
    #[error("signal of {len} samples is shorter than the window ({window})")]
    SignalTooShort { len: usize, window: usize },
    #[error("frame {frame} has {found} bins, expected {expected}")]
    InconsistentFrame {
        frame: usize,
        found: usize,
        expected: usize,
    },
    #[error("spectrogram has no frames")]
    Empty,
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene has no sources and no noise or echo")]
    EmptyScene,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid source {index}: {reason}")]
    InvalidSource { index: usize, reason: String },
    #[error("delay of {delay_samples:.2} samples exceeds signal length {len}")]
    DelayTooLong { delay_samples: f64, len: usize },
    #[error("echo reference given without an echo path")]
    MissingEchoPath,
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("scene file: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum DspError {
    #[error("need at least {needed} channels, got {found}")]
    TooFewChannels { needed: usize, found: usize },
    #[error("channel count {channels} does not match geometry with {mics} microphones")]
    GeometryMismatch { channels: usize, mics: usize },
    #[error("frame of {len} samples is too short (need at least {needed})")]
    FrameTooShort { len: usize, needed: usize },
    #[error("signal lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("need at least {needed} frames, got {found}")]
    TooFewFrames { needed: usize, found: usize },
    #[error("bin count mismatch: spectrogram has {spec}, estimate has {estimate}")]
    BinMismatch { spec: usize, estimate: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Error)]
pub enum WakeError {
    #[error("signal of {len} samples is shorter than one analysis window ({window})")]
    SignalTooShort { len: usize, window: usize },
    #[error("invalid MFCC configuration: {0}")]
    InvalidConfig(String),
    #[error("feature dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("empty feature matrix")]
    EmptyInput,
    #[error("no enrollment utterances")]
    NoUtterances,
    #[error("utterance {index} lasts {duration_s:.3} s, outside 0.3-3 s")]
    UtteranceDuration { index: usize, duration_s: f64 },
    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),
    #[error("stream ({stream} frames) is shorter than the template ({template} frames)")]
    StreamTooShort { stream: usize, template: usize },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("template file: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum FaceError {
    #[error("image is {width}x{height}, expected 64x64")]
    WrongSize { width: usize, height: usize },
    #[error("image has no contrast; cannot embed a constant image")]
    DegenerateImage,
    #[error("pixel value out of [0, 1] at {0}")]
    PixelRange(usize),
    #[error("no images supplied")]
    NoImages,
    #[error("match threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("identity name must be 1-255 bytes without control characters")]
    InvalidIdentity,
    #[error("embedding has dimension {0}, expected 128")]
    WrongDimension(usize),
    #[error("embedding is not unit length (norm {0})")]
    NotNormalized(f64),
    #[error("pgm: {0}")]
    Pgm(String),
    #[error("database: {0}")]
    Database(String),
    #[error("embedding import line {line}: {reason}")]
    Import { line: usize, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("event at t={found} precedes last processed time {last}")]
    OutOfOrder { last: f64, found: f64 },
    #[error("utterance requested outside the STREAMING phase")]
    NotStreaming,
    #[error("non-finite event timestamp")]
    BadTimestamp,
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Wake(#[from] WakeError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unsupported config schema version {0}")]
    Version(u32),
    #[error("invalid override `{0}`")]
    Override(String),
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: String, reason: String },
}
