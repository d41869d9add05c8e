use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lrwave_cli::{run, ExperimentConfig, Mode};

/// Randomly layered media experiments: synthesis, propagation, sweeps,
/// limit processes and the verification suite.
#[derive(Parser, Debug)]
#[command(name = "lrwave", version)]
struct Args {
    /// Experiment config (TOML), or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Override ensemble.base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: $LRWAVE_JOBS, else all cores).
    #[arg(long, env = "LRWAVE_JOBS")]
    jobs: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

fn load(args: &Args) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.ensemble.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(1);
        }
    }
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(outcome) if outcome.verify_failed => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Ok(outcome) => {
            eprintln!(
                "{} mode: {} artifacts in {} ({:.1} s)",
                cfg.mode,
                outcome.manifest.artifacts.len(),
                cfg.out.display(),
                outcome.manifest.wall_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
