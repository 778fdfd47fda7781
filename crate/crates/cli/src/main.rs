use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use tkgmlp_cli::commands::{self, Split};
use tkgmlp_cli::config::RunConfig;
use tkgmlp_cli::CliError;

/// Hybrid KAN + gated-MLP classifier for imbalanced tabular data.
///
/// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
/// Set TKGMLP_LOG=off to silence per-epoch progress on stderr.
#[derive(Debug, Parser)]
#[command(name = "tkgmlp", version)]
struct Cli {
    /// Overrides the `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic task: train/valid/test CSVs plus oracle.csv.
    Synth {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory (default: config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit encoder and model; writes checkpoint.json and train_log.tsv.
    Fit {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a split or CSV with a saved checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// CSV to score; defaults to rebuilding `--split` from the checkpoint's config.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Train every grid point and write a ranked grid.tsv.
    Grid {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the full 96-point search space instead of the config's [grid].
        #[arg(long)]
        full: bool,
    },
    /// Write the encoded feature matrix of one split as CSV.
    Encode {
        #[arg(short, long)]
        config: PathBuf,
        /// Reuse the encoder stored in a checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String, CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Synth { config, out } => {
            let cfg = load_config(&config, seed)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            commands::cmd_synth(&cfg, &dir)
        }
        Command::Fit { config, out } => {
            let cfg = load_config(&config, seed)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            commands::cmd_fit(&cfg, &dir)
        }
        Command::Evaluate {
            checkpoint,
            data,
            split,
        } => commands::cmd_evaluate(&checkpoint, data.as_deref(), split),
        Command::Grid { config, out, full } => {
            let cfg = load_config(&config, seed)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            commands::cmd_grid(&cfg, &dir, full)
        }
        Command::Encode {
            config,
            checkpoint,
            split,
            out,
        } => {
            let cfg = load_config(&config, seed)?;
            commands::cmd_encode(&cfg, checkpoint.as_deref(), split, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
