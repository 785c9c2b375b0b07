use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use morphguard::cli::commands::{run, CommandKind, Invocation};
use morphguard::cli::ExperimentConfig;
use morphguard::Result;

/// Dual-branch morph margin experiments on synthetic identities.
#[derive(Debug, Parser)]
#[command(name = "morphguard", version)]
struct Args {
    /// Experiment config (JSON); defaults apply to omitted fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Model checkpoint to evaluate, analyze or adapt.
    #[arg(long, global = true, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
    /// Data bundle written by gen-data; regenerated from the config if absent.
    #[arg(long, global = true, value_name = "DIR")]
    data: Option<PathBuf>,
    /// Run sweep entries on separate threads.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Synthesize identities, morph protocols and training sets.
    GenData,
    /// Train one model with the configured margins.
    Train,
    /// Train and evaluate one model per morph margin offset.
    SweepMargins,
    /// Bona fide pretraining followed by morph-aware adaptation.
    Adapt,
    /// Verification and morph metrics for a checkpoint.
    Eval,
    /// Aligned morph feature clouds and their confidence ellipse.
    AnalyzeFeatures,
    /// Print the default config as JSON.
    PrintDefaultConfig,
}

fn execute(args: Args) -> Result<()> {
    let kind = match args.command {
        Cmd::PrintDefaultConfig => {
            print!("{}", ExperimentConfig::default().to_json());
            return Ok(());
        }
        Cmd::GenData => CommandKind::GenData,
        Cmd::Train => CommandKind::Train,
        Cmd::SweepMargins => CommandKind::SweepMargins,
        Cmd::Adapt => CommandKind::Adapt,
        Cmd::Eval => CommandKind::Eval,
        Cmd::AnalyzeFeatures => CommandKind::AnalyzeFeatures,
    };
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let inv = Invocation {
        config,
        out,
        checkpoint: args.checkpoint,
        data: args.data,
        parallel: args.parallel,
    };
    run(kind, &inv)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
