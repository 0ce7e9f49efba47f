use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dynblockade::cli::{run, CliError, Mode, RunConfig};

/// Simulate and optimize dynamical photon blockade in a bosonic Josephson junction.
#[derive(Debug, Parser)]
#[command(name = "dynblockade", version)]
struct Args {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fill unset system/initial/waveform fields from a shipped configuration (example1, example2).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step in units of 1/kappa.
    #[arg(long)]
    step: Option<f64>,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            let config = RunConfig::from_json(&text)?;
            if config.mode != args.mode {
                return Err(CliError::Validation(format!(
                    "config mode {:?} does not match command {:?}",
                    config.mode, args.mode
                )));
            }
            config
        }
        None => RunConfig::new(args.mode),
    };
    if let Some(name) = &args.preset {
        config.apply_preset(name)?;
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if args.step.is_some() {
        config.step = args.step;
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match load(&args).and_then(|c| run(&c)) {
        Ok(outcome) => {
            for f in outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
