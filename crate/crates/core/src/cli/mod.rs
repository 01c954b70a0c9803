//! Command-line front end: one subcommand per sweep.

mod commands;
mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, Document};
pub use config::ConfigFile;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "timebin",
    version,
    about = "Time-bin photon/spin-wave entanglement simulator"
)]
pub struct Cli {
    /// Flat TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Trials per sweep point (per setting for `bell`).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Conditional retrieval versus read-out time.
    RetrievalSweep,
    /// Time-bin selectivity versus pair probability.
    SelectivitySweep,
    /// Correlation fringes versus read phase for each configured write phase.
    FringeScan,
    /// Fitted fringe visibility and coincidence rate versus pair probability.
    VisibilitySweep,
    /// CHSH parameter at the optimal analyzer settings.
    Bell {
        /// Also write the sampled click streams, one file per setting.
        #[arg(long)]
        events: bool,
    },
    /// Phase-lock simulation: trajectory and hold-window jitter.
    LockSim,
    /// Histograms and correlations of recorded event files.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RetrievalSweep => "retrieval-sweep",
            Command::SelectivitySweep => "selectivity-sweep",
            Command::FringeScan => "fringe-scan",
            Command::VisibilitySweep => "visibility-sweep",
            Command::Bell { .. } => "bell",
            Command::LockSim => "lock-sim",
            Command::Analyze { .. } => "analyze",
        }
    }
}

fn emit(cli: &Cli, docs: &[Document]) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for d in docs {
                fs::write(dir.join(&d.name), d.render())?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            let written = docs
                .iter()
                .filter(|d| !d.is_events)
                .try_for_each(|d| w.write_all(d.render().as_bytes()))
                .and_then(|()| w.flush());
            match written {
                // reader went away, e.g. piped into `head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    if cli.trials == Some(0) {
        return Err(Error::invalid("trials", "must be positive"));
    }
    let docs = execute(cli)?;
    emit(cli, &docs)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("timebin {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
