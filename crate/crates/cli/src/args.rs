//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 expectation failure.
Logs are JSON lines on stderr. File formats are described in docs/FORMATS.md.";

#[derive(Debug, Parser)]
#[command(name = "gazegate", version, about = "Face-gated smart speaker engine", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML, `schema_version = 1`); defaults apply otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set session.auth_ttl_s=10`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Master seed; replaces the configured seed and any seed in scene files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write zero for every wall-clock timestamp.
    #[arg(long, global = true)]
    pub freeze_time: bool,
    /// Only log errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Depth {
    Pcm16,
    Float32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene file to a 4-channel WAV plus a truth document.
    ///
    /// Writes mics.wav, target.wav (clean first source at the array centre),
    /// reference.wav when the scene has a loudspeaker, and truth.json.
    Simulate {
        /// Scene description (TOML).
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "float32")]
        bit_depth: Depth,
    },
    /// Run the DSP front-end on a 4-channel recording.
    ///
    /// Writes ch0.wav (processed voice), bundle.wav (6 channels: processed,
    /// 4 raw mics, mic average), doa.jsonl and process.json.
    Process {
        /// 4-channel WAV at 16 kHz.
        #[arg(long)]
        input: PathBuf,
        /// Mono loudspeaker reference; enables echo cancellation.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add face embeddings for one identity to an enrollment database.
    EnrollFace {
        /// Database file; created when missing.
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        identity: String,
        /// Glob pattern(s) of 64x64 PGM images.
        #[arg(long = "images", required = true)]
        images: Vec<String>,
        /// Replace the identity's embeddings instead of appending.
        #[arg(long)]
        replace: bool,
    },
    /// Build a wake-word template from recorded utterances.
    EnrollWake {
        #[arg(long)]
        name: String,
        /// Glob pattern(s) of mono 16 kHz WAV files, 0.3-3 s each.
        #[arg(long = "wavs", required = true)]
        wavs: Vec<String>,
        /// Template file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep detection thresholds over a labelled corpus.
    ///
    /// Writes `threshold,fa_per_hour,miss_rate` CSV and a JSON-lines
    /// detection log from which the CSV can be recomputed.
    EvalRoc {
        /// Corpus manifest (TOML `[[entry]]` tables with path and label).
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        template: PathBuf,
        /// `lo:hi:count` grid or a comma-separated list.
        #[arg(long, default_value = "0.05:0.5:10")]
        thresholds: String,
        /// CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Detection log output (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Replay the attack scenarios with the face gate on and off.
    ///
    /// Exits 3 unless every attack is blocked with the gate on, all but at
    /// most one get through with it off, and every control is allowed.
    AttackSuite {
        /// Report output (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Directory of scenario scripts (*.toml); built-ins otherwise.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Directory for per-scenario audit traces.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Full chain: front-end, wake spotting, face gate and session.
    ///
    /// Writes ch0.wav, trace.jsonl, feedback.jsonl, utterance_NN.wav and
    /// summary.json.
    RunPipeline {
        /// 4-channel WAV at 16 kHz.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Enrollment database.
        #[arg(long)]
        db: PathBuf,
        /// Wake-word template.
        #[arg(long)]
        template: PathBuf,
        /// Face sighting `SECONDS:PGM_PATH`; repeatable.
        #[arg(long = "face", value_name = "T:PATH")]
        faces: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic corpus: wake-word positives and enrollment takes,
    /// negative audio, a manifest and owner/stranger face images.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        positives: usize,
        /// Seconds of negative audio.
        #[arg(long, default_value_t = 60.0)]
        negative_s: f64,
        /// Length of each negative file, seconds.
        #[arg(long, default_value_t = 30.0)]
        chunk_s: f64,
        /// Face takes per identity.
        #[arg(long, default_value_t = 3)]
        face_takes: u64,
    },
}
