//! Template wake-word spotting (MFCC + DTW) and ROC evaluation in false
//! alarms per hour against miss rate.

pub mod corpus;
pub mod detect;
pub mod dtw;
pub mod mfcc;
pub mod roc;
pub mod template;

pub use corpus::{
    negative_chunk, positive_corpus, positive_utterance, CorpusManifest, Label, ManifestEntry,
    NegativeCorpus,
};
pub use detect::{detect_stream, DetectConfig, DetectionEvent, DtwSpotter, WakeEngine};
pub use dtw::dtw_distance;
pub use mfcc::{extract_mfcc, MfccConfig, MfccExtractor, MfccMatrix};
pub use roc::{evaluate_roc, threshold_grid, NegativePeak, RocPoint, RocReport};
pub use template::{enroll_template, WakeTemplate};
