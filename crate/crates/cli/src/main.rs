//! `lagscope`: ingest, collect, simulate, analyze, and report on retail
//! price panels.
//!
//! Exit codes: 0 success, 1 validation or configuration error, 2 partial
//! collection failure.

mod collect;
mod commands;
mod config;
mod log;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};
use lagscope::report::Format;

use commands::{AnalyzeArgs, SimSource};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "lagscope", version, about = "Leader-follower pricing analysis for retail price panels")]
struct Cli {
    /// Run configuration (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate observation CSV files and append them to the log.
    Ingest {
        /// Observation CSV files (defaults to `observations` in the config).
        files: Vec<PathBuf>,
        /// Observation log directory (defaults to `log_dir` in the config).
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Fetch every configured source once and append what it returns.
    Collect {
        /// Observation log directory (defaults to `log_dir` in the config).
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Generate a synthetic panel with planted behaviours.
    Simulate {
        /// Simulator configuration (TOML).
        #[arg(long, conflicts_with = "preset")]
        sim_config: Option<PathBuf>,
        /// Built-in scenario: injection or confound.
        #[arg(long)]
        preset: Option<String>,
        /// Required; there is no default seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Reject configs with followers.
        #[arg(long)]
        confound: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full analysis and write tables, clusters, and the screen.
    Analyze {
        /// Observation CSV files; used instead of the log when given.
        #[arg(long, num_args = 1..)]
        observations: Vec<PathBuf>,
        /// Replay this observation log instead of reading CSV files.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Item category CSV (default: every item random).
        #[arg(long)]
        categories: Option<PathBuf>,
        /// store_id,item_id CSV of carried items (default: observed pairs).
        #[arg(long)]
        carried: Option<PathBuf>,
        /// Comma-separated cluster windows in days.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<u32>>,
        /// Focal store for the relative-day tables.
        #[arg(long)]
        focal: Option<String>,
        /// Days either side of the focal change (default 3).
        #[arg(long)]
        radius: Option<u32>,
        /// Follow-screen threshold on the peak fraction (default 0.5).
        #[arg(long)]
        threshold: Option<f64>,
        /// Output directory (default lagscope-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Table format: csv or markdown.
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Re-render a saved bundle.json.
    Report {
        #[arg(long)]
        bundle: PathBuf,
        /// Table format: csv or markdown.
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Output directory for the tables.
        #[arg(long)]
        out: PathBuf,
    },
}

fn require_log_dir(flag: Option<PathBuf>, config: &RunConfig) -> anyhow::Result<PathBuf> {
    flag.or_else(|| config.log_dir.clone())
        .ok_or_else(|| anyhow::anyhow!("log_dir: give --log-dir or set log_dir in the config"))
}

/// Returns true when collection partially failed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { files, log_dir } => {
            let dir = require_log_dir(log_dir, &config)?;
            commands::ingest(&config, &files, &dir)?;
        }
        Command::Collect { log_dir } => {
            let dir = require_log_dir(log_dir, &config)?;
            return commands::collect(&config, &dir);
        }
        Command::Simulate {
            sim_config,
            preset,
            seed,
            confound,
            out,
        } => {
            let source = match (&sim_config, &preset) {
                (Some(path), _) => SimSource::File(path),
                (None, Some(name)) => SimSource::Preset(name),
                (None, None) => anyhow::bail!("give --sim-config or --preset"),
            };
            commands::simulate_cmd(source, seed, &out, confound)?;
        }
        Command::Analyze {
            observations,
            log_dir,
            categories,
            carried,
            windows,
            focal,
            radius,
            threshold,
            out,
            format,
        } => {
            config.categories = categories.or(config.categories);
            config.carried = carried.or(config.carried);
            config.windows = windows.unwrap_or(config.windows);
            config.focal_store = focal.or(config.focal_store);
            config.radius = radius.unwrap_or(config.radius);
            config.screen_threshold = threshold.unwrap_or(config.screen_threshold);
            config.output_dir = out.unwrap_or(config.output_dir);
            let args = AnalyzeArgs {
                observations,
                log_dir,
                format,
            };
            commands::analyze(&config, &args)?;
        }
        Command::Report { bundle, format, out } => commands::report(&bundle, format, &out)?,
    }
    Ok(false)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
