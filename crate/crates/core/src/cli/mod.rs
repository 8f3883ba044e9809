//! Command-line front end.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::output::Format;
use commands::Context;
use config::RunConfig;

/// Overrides the BLAS thread count.
pub const THREADS_ENV: &str = "LSSCATTER_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "lsscatter",
    version,
    about = "Lippmann-Schwinger scattering at desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Also write the sphere and volume grids.
    #[arg(long, global = true)]
    pub dump_grids: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Amplitudes, S-matrix spectra and cross sections per energy.
    Scatter,
    /// Radial phase shifts and partial-wave cross sections.
    Phaseshifts,
    /// Run the verification suite.
    Verify,
    /// Scan for bound states on the negative energy axis.
    Boundstates,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

/// 0 when every check passes, 1 for a failed numeric criterion, 2 for bad
/// configuration or input.
pub fn exit_code(result: &Result<bool>) -> u8 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) if is_input_error(e) => 2,
        Err(_) => 1,
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidPotential(_)
            | Error::InvalidGrid(_)
            | Error::OutOfTable { .. }
            | Error::NonRadial
            | Error::NonPositiveEnergy(_)
            | Error::Io(_)
    )
}

extern "C" {
    fn openblas_set_num_threads(n: std::ffi::c_int);
}

fn apply_thread_override() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: std::ffi::c_int = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    unsafe { openblas_set_num_threads(n) };
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<bool> {
    apply_thread_override()?;
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let ctx = Context {
        cfg: &cfg,
        out: &out,
        format: cli.format.map(Format::from).unwrap_or(cfg.format),
        hash: cfg.hash(),
    };
    if cli.dump_grids {
        commands::dump_grids(&ctx)?;
    }
    match cli.command {
        Command::Scatter => commands::scatter(&ctx),
        Command::Phaseshifts => commands::phaseshifts(&ctx),
        Command::Verify => commands::verify(&ctx),
        Command::Boundstates => commands::boundstates(&ctx),
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result))
}
