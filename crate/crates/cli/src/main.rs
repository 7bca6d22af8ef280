use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use safeset_cli::config::ExperimentConfig;
use safeset_cli::{commands, error_code, Status};

/// Black-box scenario-based safety testing experiments.
#[derive(Parser)]
#[command(name = "safeset", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify or falsify a candidate safe set.
    Validate(Common),
    /// Quantify the almost safe set of a tester.
    Quantify(Common),
    /// Compare the aggressiveness of two testers.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Compare every ordered pair of testers.
        #[arg(long)]
        matrix: bool,
    },
    /// Exhaustively compare the cost tallies of two exploration orders.
    Nfl {
        #[command(flatten)]
        common: Common,
        /// Perturb the second tally before comparing.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Failure-rate table and cover slices from earlier artifacts.
    Report(Common),
    /// Train the learned adversary.
    Train(Common),
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output = std::env::current_dir()?.join(o);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Status> {
    match cli.cmd {
        Cmd::Validate(c) => commands::validate(&load(&c)?),
        Cmd::Quantify(c) => commands::quantify_cmd(&load(&c)?),
        Cmd::Compare { common, matrix } => commands::compare(&load(&common)?, matrix),
        Cmd::Nfl { common, corrupt } => commands::nfl(&load(&common)?, corrupt),
        Cmd::Report(c) => commands::report(&load(&c)?),
        Cmd::Train(c) => commands::train(&load(&c)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(s) => s.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
