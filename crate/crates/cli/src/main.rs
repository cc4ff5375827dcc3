//! `lta-sentinel`: run the supervision daemon, simulate deployments, report
//! long-term-autonomy metrics, replay logs and demonstrate docking.

mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const STORE_ENV: &str = "LTA_SENTINEL_STORE";

#[derive(Debug, Parser)]
#[command(
    name = "lta-sentinel",
    version,
    about = "Long-term-autonomy supervision for a mobile service robot"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the supervision stack on a simulated robot and serve the supervisor gateway.
    Daemon(DaemonArgs),
    /// Simulate a scenario and write its event log.
    Sim(SimArgs),
    /// Compute the metrics report of an event log.
    Report(ReportArgs),
    /// Print the events of a log, optionally paced in time.
    Replay(ReplayArgs),
    /// Closed-loop docking runs from random poses in front of the station.
    DockDemo(DockDemoArgs),
}

#[derive(Debug, Args)]
pub struct DaemonArgs {
    /// Daemon configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Scenario to run instead of the configured one.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated seconds per wall second.
    #[arg(long)]
    pub accel: Option<f64>,
    /// Event store; overrides the configured one.
    #[arg(long, env = STORE_ENV)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the event log (JSON lines).
    #[arg(long, env = STORE_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Event log; defaults to the store.
    #[arg(env = STORE_ENV)]
    pub log: PathBuf,
    /// Duty schedule (TOML); defaults to weekday office hours.
    #[arg(long, conflicts_with = "scenario")]
    pub schedule: Option<PathBuf>,
    /// Take the duty schedule from this scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Event log; defaults to the store.
    #[arg(env = STORE_ENV)]
    pub log: PathBuf,
    /// Pace output at this many log seconds per wall second. Unpaced without it.
    #[arg(long)]
    pub accel: Option<f64>,
    /// Only events of these kinds (e.g. `mode_change`), repeatable.
    #[arg(long = "kind")]
    pub kinds: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DockDemoArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: u32,
    /// Range noise of the simulated laser, m.
    #[arg(long, default_value_t = 0.005)]
    pub sigma: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Daemon(_)) {
        tracing::Level::INFO
    } else {
        tracing::Level::WARN
    };
    // RUST_LOG takes a single level here (`debug`, `warn`, ...).
    let level = std::env::var("RUST_LOG")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default_level);
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
