//! The `gazegate` command-line driver.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use clap::Parser;

use args::{Cli, Command};
use commands::{Context, CorpusArgs, PipelineArgs};
use error::{exit, CliError};
use gazegate_core::RunConfig;
use output::{Clock, Logger};

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::Process { .. } => "process",
        Command::EnrollFace { .. } => "enroll-face",
        Command::EnrollWake { .. } => "enroll-wake",
        Command::EvalRoc { .. } => "eval-roc",
        Command::AttackSuite { .. } => "attack-suite",
        Command::RunPipeline { .. } => "run-pipeline",
        Command::SynthCorpus { .. } => "synth-corpus",
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.global.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    let mut cfg = RunConfig::with_overrides(text.as_deref(), &cli.global.overrides)?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli, ctx: &Context) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate {
            scene,
            out,
            bit_depth,
        } => commands::simulate(ctx, scene, out, *bit_depth),
        Command::Process {
            input,
            reference,
            out,
        } => commands::process(ctx, input, reference.as_deref(), out),
        Command::EnrollFace {
            db,
            identity,
            images,
            replace,
        } => commands::enroll_face(ctx, db, identity, images, *replace),
        Command::EnrollWake { name, wavs, out } => commands::enroll_wake(ctx, name, wavs, out),
        Command::EvalRoc {
            manifest,
            template,
            thresholds,
            out,
            log,
        } => commands::eval_roc(ctx, manifest, template, thresholds, out, log.as_deref()),
        Command::AttackSuite {
            out,
            scenarios,
            trace_dir,
        } => commands::attack_suite(ctx, out, scenarios.as_deref(), trace_dir.as_deref()),
        Command::RunPipeline {
            input,
            reference,
            db,
            template,
            faces,
            out,
        } => commands::run_pipeline(
            ctx,
            &PipelineArgs {
                input,
                reference: reference.as_deref(),
                db,
                template,
                faces,
                out,
            },
        ),
        Command::SynthCorpus {
            out,
            positives,
            negative_s,
            chunk_s,
            face_takes,
        } => commands::synth_corpus(
            ctx,
            &CorpusArgs {
                out,
                positives: *positives,
                negative_s: *negative_s,
                chunk_s: *chunk_s,
                face_takes: *face_takes,
            },
        ),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
        }
    };
    let clock = Clock {
        frozen: cli.global.freeze_time,
    };
    let log = Logger {
        command: command_name(&cli.command),
        quiet: cli.global.quiet,
        clock,
    };
    let result = load_config(&cli).and_then(|config| {
        let ctx = Context {
            config,
            seed_override: cli.global.seed,
            clock,
            log: log.clone(),
        };
        dispatch(&cli, &ctx)
    });
    match result {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            log.error(&e.to_string());
            e.exit_code()
        }
    }
}
