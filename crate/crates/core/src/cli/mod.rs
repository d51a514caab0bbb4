//! Command-line experiment runner.
//!
//! ```text
//! boxquant run --config <path> [--seed N] [--out <path>] [--format csv|json] [--preset fig3]
//! boxquant verify <result.csv|result.json>
//! boxquant preset <name>
//! ```
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 config error, 3 solver
//! error, 4 I/O error. `BOXQUANT_WORKERS` sets the worker-thread count
//! (default: available parallelism).

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{preset, ConfigError, ExperimentConfig, Format, Mode, PRESETS};
pub use output::{Cell, Table};
pub use run::{execute, RunError};
pub use verify::{verify_table, VerifyReport};

pub const WORKERS_ENV: &str = "BOXQUANT_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "boxquant", version, about = "Box-constrained and one-bit quantized precoding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file or a built-in preset.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.path`; stdout when neither is given.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `output.format`.
        #[arg(long)]
        format: Option<Format>,
        /// One of fig1, fig2, fig3, fig4-left, fig4-right.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Recompute the theory columns of a result file from its parameter columns.
    Verify { input: PathBuf },
    /// Print a preset as a config file.
    Preset { name: String },
}

/// Everything that ends a command early, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Solver(RunError),
    Io { path: PathBuf, source: std::io::Error },
    Mismatch(VerifyReport),
    BadInput(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::BadInput(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io { .. } => EXIT_IO,
            CliError::Mismatch(_) => EXIT_MISMATCH,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
            CliError::Mismatch(r) => {
                writeln!(f, "verification failed: {} mismatching values", r.mismatches.len())?;
                for m in r.mismatches.iter().take(20) {
                    writeln!(f, "  {m}")?;
                }
                Ok(())
            }
            CliError::BadInput(m) => write!(f, "{m}"),
        }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(ConfigError { line: None, message: message.into() })
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Worker count from the environment; `None` means rayon's default.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(config_error(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Loads the config named by `--config`/`--preset` and applies overrides.
pub fn load_config(
    config: Option<&Path>,
    preset_name: Option<&str>,
    seed: Option<u64>,
    out: Option<&Path>,
    format: Option<Format>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (config, preset_name) {
        (Some(_), Some(_)) => return Err(config_error("give either --config or --preset, not both")),
        (None, None) => return Err(config_error("one of --config or --preset is required")),
        (None, Some(name)) => preset(name)
            .ok_or_else(|| config_error(format!("unknown preset {name:?}; known: {}", PRESETS.join(", "))))?,
        (Some(path), None) => {
            let bytes = read(path)?;
            let text = String::from_utf8(bytes).map_err(|_| config_error("config is not UTF-8"))?;
            ExperimentConfig::parse(&text).map_err(CliError::Config)?
        }
    };
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(p) = out {
        cfg.output.path = Some(p.to_path_buf());
    }
    if let Some(f) = format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

/// Runs a config and writes its result. Returns the table for callers that
/// want it.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let table = execute(cfg).map_err(CliError::Solver)?;
    output::emit(&table, cfg, cfg.output.path.as_deref(), cfg.output.format)
        .map_err(|e| CliError::Io { path: e.path, source: e.source })?;
    Ok(table)
}

/// Verifies a result file; the format follows the extension.
pub fn verify_file(path: &Path) -> Result<VerifyReport, CliError> {
    let bytes = read(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let table = if is_json { Table::from_json(&bytes) } else { Table::from_csv(&bytes) }
        .map_err(|e| CliError::BadInput(format!("cannot read {}: {e}", path.display())))?;
    let report = verify_table(&table).map_err(CliError::BadInput)?;
    if report.ok() {
        Ok(report)
    } else {
        Err(CliError::Mismatch(report))
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, out, format, preset } => {
            let cfg = load_config(config.as_deref(), preset.as_deref(), seed, out.as_deref(), format)?;
            run_config(&cfg).map(|_| ())
        }
        Command::Verify { input } => {
            let r = verify_file(&input)?;
            println!(
                "verified {} values in {} rows, max relative difference {:e}",
                r.values_checked, r.rows, r.max_diff
            );
            Ok(())
        }
        Command::Preset { name } => {
            let cfg = preset(&name)
                .ok_or_else(|| config_error(format!("unknown preset {name:?}; known: {}", PRESETS.join(", "))))?;
            println!("{}", cfg.to_json());
            Ok(())
        }
    }
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = workers_from_env().and_then(|workers| match workers {
        None => dispatch(cli),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(config_error(format!("cannot start {n} workers: {e}"))),
        },
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("boxquant: {e}");
            e.exit_code()
        }
    }
}
