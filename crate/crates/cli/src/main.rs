use std::path::{Path, PathBuf};
use std::process::ExitCode;

use activecl_cli::{cmd_gen_data, cmd_report, cmd_run, Profile, RunConfig};
use anyhow::Result;
use clap::{Parser, Subcommand};

/// Contrastive learning with active subset selection on synthetic patches.
///
/// Log verbosity is read from ACTIVECL_LOG (error, warn, info, debug, trace;
/// default info).
#[derive(Debug, Parser)]
#[command(name = "activecl", version)]
struct Cli {
    /// TOML configuration file layered over the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Default parameter set: desk or paper.
    #[arg(long, global = true)]
    profile: Option<Profile>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic dataset to a binary file.
    GenData {
        #[arg(long)]
        out: PathBuf,
        /// Also write the dataset as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the benchmark and every strategy for every repetition.
    Run {
        /// Output directory, overriding output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize experiment logs into tables and an F1 plot.
    Report {
        /// Directory holding experiment-log CSVs.
        #[arg(long)]
        logs: PathBuf,
        /// Destination directory [default: <logs>/../report].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path, cli.profile)?,
        None => RunConfig::profile(cli.profile.unwrap_or(Profile::Desk)),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::GenData { out, csv } => {
            cmd_gen_data(&load_config(&cli)?, out, csv.as_deref())?;
        }
        Command::Run { out } => {
            let config = load_config(&cli)?;
            let dir = out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
            let artifacts = cmd_run(&config, &dir)?;
            for name in &artifacts.truncated {
                log::warn!("{name} stopped early: unlabeled pool exhausted");
            }
            println!("wrote {} experiment logs to {}", artifacts.logs.len(), dir.join("logs").display());
        }
        Command::Report { logs, out } => {
            let out = out
                .clone()
                .unwrap_or_else(|| logs.parent().unwrap_or(Path::new(".")).join("report"));
            let files = cmd_report(logs, &out)?;
            print!("{}", std::fs::read_to_string(&files.text)?);
            println!("\nreport written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACTIVECL_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
