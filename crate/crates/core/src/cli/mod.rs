//! Command-line front end: `nonnoether <command> <config> [flags]`.
//!
//! Exit codes: 0 when every check passes, 2 when a mathematical check
//! fails, 1 for usage, I/O and config errors.

mod commands;
pub mod config;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::{execute, Settings};
pub use config::{load_system, ConfigError, LoadedSystem, SystemConfig};
pub use report::{Report, Section};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Classify the generator and validate the structure.
    Check,
    /// Construct the conserved quantities.
    Invariants,
    /// Integrate trajectories and measure drift.
    Verify,
    /// Yang–Baxter condition and pairwise brackets.
    Involution,
    /// Everything above.
    Report,
}

#[derive(Debug, Parser)]
#[command(name = "nonnoether", version, about = "Conserved quantities from non-Noether symmetries")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// System declaration (TOML).
    pub config: PathBuf,
    /// RNG seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Residual tolerance for symmetry checks.
    #[arg(long, default_value_t = crate::mechanics::DEFAULT_TOL)]
    pub tol: f64,
    /// Integrator step size; overrides the config.
    #[arg(long)]
    pub steps: Option<f64>,
    /// Integration time; overrides the config.
    #[arg(long)]
    pub time: Option<f64>,
    /// Number of random initial points for `verify`.
    #[arg(long)]
    pub points: Option<usize>,
    /// Also write the JSON report to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Parses arguments, runs the command and prints the report. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let loaded = match load_system(&cli.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let settings = match Settings::from_cli(&cli, &loaded) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = execute(cli.command, &loaded, &settings);
    print!("{}", report.render_text());
    let json = report.render_json();
    println!("--- json ---");
    println!("{json}");
    if let Some(path) = &cli.json {
        if let Err(e) = std::fs::write(path, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
