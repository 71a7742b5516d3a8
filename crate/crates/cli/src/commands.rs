//! Subcommand implementations. Each returns the artefacts it wrote.

use std::path::{Path, PathBuf};

use gazegate_core::audio::{read_wav, AudioBuffer, BitDepth};
use gazegate_core::dsp::{process_pipeline, ChannelBundle};
use gazegate_core::face::{
    enroll, gate_decision, recognize, synthetic_face, EnrollmentDb, FaceImage, ProjectionEmbedder,
};
use gazegate_core::scene::{simulate_scene, ArrayGeometry, SceneFile};
use gazegate_core::session::{
    builtin_scenarios, feedback_for, replay_stream, run_attack_suite, Event, ScenarioEnv,
    ScenarioScript, SessionConfig, OWNER_FACE,
};
use gazegate_core::wakeword::{
    enroll_template, evaluate_roc, negative_chunk, positive_utterance, threshold_grid,
    CorpusManifest, DtwSpotter, Label, ManifestEntry, WakeEngine, WakeTemplate,
};
use gazegate_core::RunConfig;
use serde_json::json;

use crate::args::Depth;
use crate::error::CliError;
use crate::output::{
    ensure_dir, expand_globs, write_atomic, write_json, write_wav_atomic, Clock, Logger,
};

/// Everything a command needs besides its own arguments.
pub struct Context {
    pub config: RunConfig,
    /// Seed given on the command line, if any.
    pub seed_override: Option<u64>,
    pub clock: Clock,
    pub log: Logger,
}

fn depth(d: Depth) -> BitDepth {
    match d {
        Depth::Pcm16 => BitDepth::Pcm16,
        Depth::Float32 => BitDepth::Float32,
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn simulate(ctx: &Context, scene: &Path, out: &Path, bit_depth: Depth) -> Result<(), CliError> {
    let file = SceneFile::load(scene)?;
    let (mut spec, geometry) = file.resolve(&base_dir(scene))?;
    if let Some(seed) = ctx.seed_override {
        spec.seed = seed;
    }
    let rendered = simulate_scene(&spec, &geometry)?;
    ensure_dir(out)?;
    let d = depth(bit_depth);
    write_wav_atomic(&out.join("mics.wav"), &rendered.mics, d)?;
    let fs = rendered.mics.sample_rate();
    write_wav_atomic(
        &out.join("target.wav"),
        &AudioBuffer::mono(rendered.truth.clean_target.clone(), fs)?,
        d,
    )?;
    if let Some(r) = &spec.echo_reference {
        let mut x = r.channel(0).to_vec();
        x.resize(rendered.mics.len(), 0.0);
        write_wav_atomic(&out.join("reference.wav"), &AudioBuffer::mono(x, fs)?, d)?;
    }
    let truth = json!({
        "sample_rate": fs,
        "num_mics": rendered.mics.num_channels(),
        "samples": rendered.mics.len(),
        "seed": spec.seed,
        "t60": spec.t60,
        "reverb_drr_db": spec.reverb_drr_db,
        "noise_level_db": spec.noise_level_db,
        "has_echo": spec.echo_reference.is_some(),
        "geometry": geometry,
        "sources": rendered.truth.sources,
    });
    write_json(&out.join("truth.json"), &truth)?;
    ctx.log.info(
        "scene rendered",
        json!({"out": out, "samples": rendered.mics.len(), "seed": spec.seed}),
    );
    Ok(())
}

fn run_front_end(
    ctx: &Context,
    input: &Path,
    reference: Option<&Path>,
) -> Result<ChannelBundle, CliError> {
    let mics = read_wav(input)?;
    let reference = reference.map(read_wav).transpose()?;
    if let Some(r) = &reference {
        if r.num_channels() != 1 {
            return Err(CliError::Usage(format!(
                "reference must be mono, got {} channels",
                r.num_channels()
            )));
        }
    }
    let bundle = process_pipeline(
        &mics,
        &ArrayGeometry::default(),
        reference.as_ref(),
        &ctx.config.dsp,
    )?;
    ctx.log.info(
        "front-end done",
        json!({"input": input, "samples": bundle.len(), "aec_engaged": bundle.aec_engaged, "doa_blocks": bundle.doa_track.len()}),
    );
    Ok(bundle)
}

pub fn process(
    ctx: &Context,
    input: &Path,
    reference: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let bundle = run_front_end(ctx, input, reference)?;
    ensure_dir(out)?;
    write_wav_atomic(&out.join("ch0.wav"), &bundle.channel0()?, BitDepth::Float32)?;
    write_wav_atomic(
        &out.join("bundle.wav"),
        &bundle.to_buffer()?,
        BitDepth::Float32,
    )?;
    write_atomic(&out.join("doa.jsonl"), bundle.doa_track_jsonl().as_bytes())?;
    let summary = json!({
        "input": input,
        "reference": reference,
        "aec_engaged": bundle.aec_engaged,
        "dereverb": ctx.config.dsp.enable_dereverb,
        "noise_suppression": ctx.config.dsp.enable_noise_suppression,
        "sample_rate": bundle.sample_rate,
        "samples": bundle.len(),
        "doa_block": bundle.doa_block,
        "channels": ["processed", "mic1", "mic2", "mic3", "mic4", "mix"],
    });
    write_json(&out.join("process.json"), &summary)
}

pub fn enroll_face(
    ctx: &Context,
    db_path: &Path,
    identity: &str,
    images: &[String],
    replace: bool,
) -> Result<(), CliError> {
    let files = expand_globs(images)?;
    let faces = files
        .iter()
        .map(|p| FaceImage::load_pgm(p))
        .collect::<Result<Vec<_>, _>>()?;
    let db = if db_path.exists() {
        EnrollmentDb::load(db_path)?
    } else {
        EnrollmentDb::new(ctx.clock.unix_seconds(), ctx.config.face.embedder_seed)
    };
    if db.embedder_seed != ctx.config.face.embedder_seed {
        ctx.log.info(
            "using the database's embedder seed",
            json!({"embedder_seed": db.embedder_seed}),
        );
    }
    let before = db.count(identity);
    let base = if replace { db.without(identity) } else { db };
    let embedder = ProjectionEmbedder::new(base.embedder_seed);
    let updated = enroll(&base, identity, &faces, &embedder)?;
    write_atomic(db_path, &updated.to_bytes())?;
    ctx.log.info(
        "faces enrolled",
        json!({"identity": identity, "images": files.len(), "before": before, "after": updated.count(identity), "total": updated.num_embeddings()}),
    );
    Ok(())
}

pub fn enroll_wake(ctx: &Context, name: &str, wavs: &[String], out: &Path) -> Result<(), CliError> {
    let files = expand_globs(wavs)?;
    let utts = files.iter().map(read_wav).collect::<Result<Vec<_>, _>>()?;
    let template = enroll_template(name, &utts, &ctx.config.mfcc)?;
    write_atomic(out, (template.to_json() + "\n").as_bytes())?;
    ctx.log.info(
        "template written",
        json!({"name": name, "exemplars": utts.len(), "out": out}),
    );
    Ok(())
}

pub fn parse_thresholds(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "bad threshold spec `{spec}`; use lo:hi:count or a comma list"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let th = match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi): (f64, f64) = (
                lo.trim().parse().map_err(|_| bad())?,
                hi.trim().parse().map_err(|_| bad())?,
            );
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 || !(hi >= lo) {
                return Err(bad());
            }
            threshold_grid(lo, hi, n)
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
        _ => return Err(bad()),
    };
    if th.is_empty() || th.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(th)
}

pub fn eval_roc(
    ctx: &Context,
    manifest: &Path,
    template: &Path,
    thresholds: &str,
    out: &Path,
    log: Option<&Path>,
) -> Result<(), CliError> {
    let th = parse_thresholds(thresholds)?;
    let m = CorpusManifest::load(manifest)?;
    let base = base_dir(manifest);
    let pos_paths = m.paths(Label::Positive, &base);
    let neg_paths = m.paths(Label::Negative, &base);
    let positives = pos_paths
        .iter()
        .map(read_wav)
        .collect::<Result<Vec<_>, _>>()?;
    let spotter = DtwSpotter::new(WakeTemplate::load(template)?, ctx.config.detect.clone())?;
    let negatives = neg_paths.iter().map(|p| read_wav(p).map_err(Into::into));
    let report = evaluate_roc(&spotter, &positives, negatives, &th)?;
    write_atomic(out, report.to_csv().as_bytes())?;
    if let Some(log) = log {
        let mut lines = vec![json!({
            "kind": "summary",
            "positives": positives.len(),
            "negatives": neg_paths.len(),
            "negative_duration_s": report.negative_duration_s,
        })
        .to_string()];
        for (p, s) in pos_paths.iter().zip(&report.positive_scores) {
            lines.push(json!({"kind": "positive", "path": p, "best_score": s}).to_string());
        }
        for peak in &report.negative_peaks {
            lines.push(
                json!({"kind": "negative_peak", "path": neg_paths[peak.stream], "time_s": peak.time_s, "score": peak.score}).to_string(),
            );
        }
        write_atomic(log, (lines.join("\n") + "\n").as_bytes())?;
    }
    ctx.log.info(
        "roc written",
        json!({"thresholds": th.len(), "positives": positives.len(), "negative_hours": report.negative_duration_s / 3600.0}),
    );
    Ok(())
}

fn load_scripts(dir: &Path) -> Result<Vec<ScenarioScript>, CliError> {
    let pattern = dir.join("*.toml").to_string_lossy().into_owned();
    expand_globs(&[pattern])?
        .iter()
        .map(|p| Ok(ScenarioScript::load(p)?))
        .collect()
}

pub fn attack_suite(
    ctx: &Context,
    out: &Path,
    scenarios: Option<&Path>,
    trace_dir: Option<&Path>,
) -> Result<(), CliError> {
    let scripts = match scenarios {
        Some(dir) => load_scripts(dir)?,
        None => builtin_scenarios(),
    };
    let env = |gate: bool| -> Result<ScenarioEnv, CliError> {
        let session = SessionConfig {
            gate_enabled: gate,
            ..ctx.config.session.clone()
        };
        let mut env = ScenarioEnv::synthetic_with(
            ctx.config.face.embedder_seed,
            session,
            &ctx.config.mfcc,
            &ctx.config.detect,
        )?;
        if let Some(dir) = scenarios {
            env.base_dir = dir.to_path_buf();
        }
        Ok(env)
    };
    let report = run_attack_suite(&scripts, &env(true)?, &env(false)?)?;
    let mut doc = serde_json::to_value(&report).expect("report serialises");
    doc["generated_at"] = json!(ctx.clock.unix_seconds());
    write_json(out, &doc)?;
    if let Some(dir) = trace_dir {
        for (suite, tag) in [(&report.gate_on, "gate_on"), (&report.gate_off, "gate_off")] {
            for o in &suite.outcomes {
                write_atomic(
                    &dir.join(format!("{}_{tag}.jsonl", o.id)),
                    o.trace_jsonl().as_bytes(),
                )?;
            }
        }
    }
    ctx.log.info(
        "attack suite done",
        json!({
            "gate_on_blocked": report.gate_on.blocked,
            "gate_off_allowed": report.gate_off.allowed,
            "attacks": report.gate_on.attacks,
            "expectations_met": report.expectations_met,
        }),
    );
    if !report.expectations_met {
        return Err(CliError::Expectation(format!(
            "gate on blocked {}/{}, gate off allowed {}/{}, controls allowed: {}",
            report.gate_on.blocked,
            report.gate_on.attacks,
            report.gate_off.allowed,
            report.gate_off.attacks,
            report.controls_allowed
        )));
    }
    Ok(())
}

fn parse_face_arg(arg: &str) -> Result<(f64, PathBuf), CliError> {
    let (t, path) = arg
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--face expects T:PATH, got `{arg}`")))?;
    let t: f64 = t
        .parse()
        .map_err(|_| CliError::Usage(format!("bad face time in `{arg}`")))?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CliError::Usage(format!(
            "face time must be non-negative in `{arg}`"
        )));
    }
    Ok((t, PathBuf::from(path)))
}

pub struct PipelineArgs<'a> {
    pub input: &'a Path,
    pub reference: Option<&'a Path>,
    pub db: &'a Path,
    pub template: &'a Path,
    pub faces: &'a [String],
    pub out: &'a Path,
}

pub fn run_pipeline(ctx: &Context, a: &PipelineArgs) -> Result<(), CliError> {
    let faces = a
        .faces
        .iter()
        .map(|f| parse_face_arg(f))
        .collect::<Result<Vec<_>, _>>()?;
    let db = EnrollmentDb::load(a.db)?;
    let spotter = DtwSpotter::new(WakeTemplate::load(a.template)?, ctx.config.detect.clone())?;
    let bundle = run_front_end(ctx, a.input, a.reference)?;
    let cfg = &ctx.config.session;
    if bundle.len() < spotter.min_stream_len() {
        return Err(CliError::Usage(format!(
            "input of {} samples is shorter than the wake template",
            bundle.len()
        )));
    }
    let embedder = ProjectionEmbedder::new(db.embedder_seed);
    let mut timeline = Vec::new();
    let mut decisions = Vec::new();
    for (t, path) in &faces {
        let emb = gazegate_core::face::FaceEmbedder::embed(&embedder, &FaceImage::load_pgm(path)?)?;
        let auth = gate_decision(&recognize(&db, &emb, cfg.face_threshold)?);
        decisions.push(json!({"t": t, "path": path, "decision": auth}));
        timeline.push((*t, 1u8, Event::FaceObserved { t: *t, auth }));
    }
    let run = replay_stream(&bundle.processed, timeline, &spotter, cfg)?;

    ensure_dir(a.out)?;
    write_wav_atomic(
        &a.out.join("ch0.wav"),
        &bundle.channel0()?,
        BitDepth::Float32,
    )?;
    let trace: String = run.trace.iter().map(|r| r.to_json() + "\n").collect();
    write_atomic(&a.out.join("trace.jsonl"), trace.as_bytes())?;
    let fs = bundle.sample_rate as f64;
    let feedback: String = run
        .trace
        .iter()
        .map(|r| {
            let sample = ((r.t * fs) as usize).min(bundle.len().saturating_sub(1));
            json!({"t": r.t, "phase": r.phase_after, "ring": feedback_for(r.phase_after, bundle.azimuth_at(sample))}).to_string() + "\n"
        })
        .collect();
    write_atomic(&a.out.join("feedback.jsonl"), feedback.as_bytes())?;
    let mut utterances = Vec::new();
    for (i, u) in run.emitted.iter().enumerate() {
        let name = format!("utterance_{i:02}.wav");
        write_wav_atomic(&a.out.join(&name), &u.audio, BitDepth::Float32)?;
        utterances.push(json!({
            "file": name,
            "identity": u.identity,
            "wake_t": u.wake_t,
            "start_sample": u.start_sample,
            "pre_roll_samples": u.pre_roll_samples,
            "samples": u.audio.len(),
            "reason": u.reason,
            "doa_azimuth_deg": bundle.azimuth_at(u.start_sample as usize),
        }));
    }
    let summary = json!({
        "input": a.input,
        "aec_engaged": bundle.aec_engaged,
        "faces": decisions,
        "wake_detections": run.detections,
        "stream_started": run.started,
        "blocked_by_gate": run.blocked,
        "utterances": utterances,
    });
    write_json(&a.out.join("summary.json"), &summary)?;
    ctx.log.info(
        "pipeline done",
        json!({"utterances": run.emitted.len(), "detections": run.detections.len()}),
    );
    Ok(())
}

pub struct CorpusArgs<'a> {
    pub out: &'a Path,
    pub positives: usize,
    pub negative_s: f64,
    pub chunk_s: f64,
    pub face_takes: u64,
}

/// Identity used for the stranger faces written by `synth-corpus`.
const STRANGER_FACE: u64 = 900;

pub fn synth_corpus(ctx: &Context, a: &CorpusArgs) -> Result<(), CliError> {
    if a.positives == 0 || !(a.negative_s > 0.0) || !(a.chunk_s > 0.0) {
        return Err(CliError::Usage(
            "positives, negative_s and chunk_s must be positive".into(),
        ));
    }
    let seed = ctx.config.seed;
    let fs = ctx.config.session.sample_rate;
    let d = BitDepth::Float32;
    let mut manifest = CorpusManifest::default();
    for i in 0..a.positives {
        let rel = PathBuf::from(format!("positives/pos_{i:03}.wav"));
        write_wav_atomic(&a.out.join(&rel), &positive_utterance(seed, i, fs), d)?;
        manifest.entries.push(ManifestEntry {
            path: rel,
            label: Label::Positive,
        });
    }
    let chunks = (a.negative_s / a.chunk_s).ceil() as usize;
    for i in 0..chunks {
        let dur = a.chunk_s.min(a.negative_s - i as f64 * a.chunk_s);
        let rel = PathBuf::from(format!("negatives/neg_{i:03}.wav"));
        write_wav_atomic(&a.out.join(&rel), &negative_chunk(seed, i, dur, fs), d)?;
        manifest.entries.push(ManifestEntry {
            path: rel,
            label: Label::Negative,
        });
    }
    write_atomic(&a.out.join("manifest.toml"), manifest.to_toml().as_bytes())?;
    // Enrollment takes come from a different seed than the positives.
    let enroll_seed = seed ^ 0x00E7_5011;
    for i in 0..3 {
        write_wav_atomic(
            &a.out.join(format!("enroll/take_{i:02}.wav")),
            &positive_utterance(enroll_seed, i, fs),
            d,
        )?;
    }
    let faces = a.out.join("faces");
    ensure_dir(&faces)?;
    for k in 0..a.face_takes {
        write_atomic(
            &faces.join(format!("owner_{k:02}.pgm")),
            &synthetic_face(OWNER_FACE, k).to_pgm(),
        )?;
        write_atomic(
            &faces.join(format!("stranger_{k:02}.pgm")),
            &synthetic_face(STRANGER_FACE + seed % 64, k).to_pgm(),
        )?;
    }
    ctx.log.info(
        "corpus written",
        json!({"positives": a.positives, "negative_files": chunks, "face_takes": a.face_takes, "seed": seed}),
    );
    Ok(())
}
