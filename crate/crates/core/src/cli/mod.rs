//! `madelung` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 domain error or a
//! failed verification check, 3 partial sweep failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::error::Error;
pub use config::{Format, RunConfig};

pub const THREADS_ENV: &str = "MADELUNG_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Domain { context: String, source: Error },
    #[error("{failed} of {total} sweep entries failed")]
    PartialSweep { failed: usize, total: usize },
    #[error("{failed} verification checks failed")]
    ChecksFailed { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Domain { .. } | CliError::ChecksFailed { .. } => 2,
            CliError::PartialSweep { .. } => 3,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Io(_) => "IoError",
            CliError::Domain { source, .. } => source.code(),
            CliError::PartialSweep { .. } => "PartialSweep",
            CliError::ChecksFailed { .. } => "ChecksFailed",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "madelung", version, about = "Self-trapped maximum-entropy densities: solves, sweeps and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial profiles U_s, rho_s and the support radius r_m for each T
    SolveSpatial,
    /// Temporal profiles U_t, rho_t and the half-width t_a for each T
    SolveTemporal,
    /// r_m, t_a, limit distances, ln Z and entropies over the T list
    Sweep,
    /// Mass, energy-momentum, Klein-Gordon, round-trip and flatness checks
    Verify,
    /// Closed-form T = 0 states and the mass they imply
    Limits,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// TOML file with RunConfig fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format of the output files
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated list of T values
    #[arg(long = "t-list", global = true, value_delimiter = ',', num_args = 1)]
    pub t_list: Option<Vec<f64>>,
    /// Spatial potential level U_s0 at the origin
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub us0: Option<f64>,
    /// Temporal potential level U_t0 at t = 0 (negative)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub ut0: Option<f64>,
    /// Reduced Planck constant
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Speed of light
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Nodes of the resampled profiles
    #[arg(long, global = true)]
    pub grid: Option<usize>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = &self.t_list {
            cfg.t_list = v.clone();
        }
        if let Some(v) = self.us0 {
            cfg.u_s0 = v;
        }
        if self.ut0.is_some() {
            cfg.u_t0 = self.ut0;
        }
        if let Some(v) = self.hbar {
            cfg.hbar = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        cfg.validate()
    }
}

fn setup_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // the global pool can only be built once per process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn write_error_record(out: &Path, err: &CliError) {
    let record = serde_json::json!({
        "code": err.code(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
    });
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), format!("{:#}\n", record));
    }
}

fn execute(command: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let _ = std::fs::remove_file(out.join("error.json"));
    match command {
        Command::SolveSpatial => commands::solve_spatial(cfg, out).map(drop),
        Command::SolveTemporal => commands::solve_temporal(cfg, out).map(drop),
        Command::Limits => commands::limits(cfg, out).map(drop),
        Command::Sweep => {
            let (_, failed) = commands::sweep(cfg, out)?;
            match failed {
                0 => Ok(()),
                _ => Err(CliError::PartialSweep { failed, total: cfg.t_list.len() }),
            }
        }
        Command::Verify => {
            let (_, failed) = commands::verify(cfg, out)?;
            match failed {
                0 => Ok(()),
                _ => Err(CliError::ChecksFailed { failed }),
            }
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match setup_threads().and_then(|_| cli.overrides.resolve()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let started = now();
    let result = execute(&cli.command, &cfg);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            write_error_record(&cfg.out, e);
            e.exit_code()
        }
    };
    // timestamps live only here so the data files stay byte-identical
    let log = format!("command = {:?}\nstarted = {started:.3}\nfinished = {:.3}\nexit_code = {code}\n", cli.command, now());
    let _ = std::fs::write(cfg.out.join("run.log"), log);
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_after_subcommand_override_defaults() {
        let cli = Cli::try_parse_from(["madelung", "sweep", "--t-list", "0.01,0.1", "--ut0", "-3", "--format", "json"]).unwrap();
        let cfg = cli.overrides.resolve().unwrap();
        assert_eq!(cfg.t_list, vec![0.1, 0.01]);
        assert_eq!(cfg.u_t0, Some(-3.0));
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 1);
        assert_eq!(CliError::Domain { context: String::new(), source: Error::DegenerateFlat }.exit_code(), 2);
        assert_eq!(CliError::ChecksFailed { failed: 1 }.exit_code(), 2);
        assert_eq!(CliError::PartialSweep { failed: 1, total: 2 }.exit_code(), 3);
    }

    #[test]
    fn help_exits_zero_and_bad_flags_exit_one() {
        assert_eq!(run(["madelung", "--help"]), 0);
        assert_eq!(run(["madelung", "sweep", "--bogus"]), 1);
        assert_eq!(run(["madelung", "sweep", "--t-list", "abc"]), 1);
    }
}
