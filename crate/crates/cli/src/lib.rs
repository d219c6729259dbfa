//! Command-line front end of the `multiphoton` crate: parameter sweeps,
//! photon distributions, full-model validation runs and coefficient dumps.
//!
//! Exit codes: 0 success, 1 usage, 2 numerical failure, 3 validation-band
//! breach.

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

pub use commands::{dump_coeffs, run_distribution, run_sweep, run_validate, SweepRow, SweepSpec};
pub use config::{Axis, Format, Output, RawConfig, Settings, Truncation};
pub use table::{Cell, Metadata, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Io(_) | Self::Csv(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

pub const EXIT_BAND_BREACH: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Dist,
    Validate,
    DumpCoeffs,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Dist => "dist",
            Self::Validate => "validate",
            Self::DumpCoeffs => "dump-coeffs",
        }
    }

    fn default_orders(&self) -> &'static str {
        match self {
            Self::Sweep => "1,2",
            Self::Validate => "2",
            Self::Dist | Self::DumpCoeffs => "1",
        }
    }
}

/// Runs `command` with `raw` settings and writes the result to `out` (stdout
/// when `None`). Returns the process exit code.
pub fn execute(command: Command, raw: &RawConfig, out: Option<&PathBuf>) -> Result<u8, CliError> {
    let settings = Settings::resolve(raw, command.default_orders())?;
    if command != Command::Sweep && settings.orders.len() != 1 {
        return Err(CliError::Usage(format!(
            "{} takes a single order",
            command.name()
        )));
    }
    let order = settings.orders[0];
    let metadata = Metadata::new(command.name(), settings.hash(command.name()));
    let mut code = 0;
    let table = match command {
        Command::Sweep => {
            let spec = SweepSpec::from_settings(&settings)?;
            let rows = run_sweep(&spec, settings.jobs)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                log::warn!("{failed} of {} sweep points failed", rows.len());
                code = 2;
            }
            commands::sweep_table(&rows, &settings, metadata)
        }
        Command::Dist => {
            let (n_max, steady) = run_distribution(
                &settings.params,
                order,
                settings.truncation,
                settings.include_kappa_eta,
            )?;
            if !steady.valid {
                log::warn!(
                    "steady state has entries below -1e-8; the point is outside model validity"
                );
            }
            commands::distribution_table(
                &settings.params,
                order,
                n_max,
                &steady,
                &settings,
                metadata,
            )
        }
        Command::Validate => {
            let check = run_validate(
                &settings.params,
                order,
                settings.truncation,
                settings.include_kappa_eta,
            )?;
            if !check.within_bands() {
                code = EXIT_BAND_BREACH;
            }
            commands::validate_table(&settings.params, order, &check, &settings, metadata)
        }
        Command::DumpCoeffs => {
            if settings.format == Format::Csv && raw.get("format").is_some() {
                return Err(CliError::Usage("dump-coeffs writes JSON only".into()));
            }
            let dump = dump_coeffs(
                &settings.params,
                order,
                settings.include_kappa_eta,
                metadata,
            )?;
            let mut sink = open(out)?;
            table::write_json(&dump, &mut sink)?;
            return Ok(0);
        }
    };
    let mut sink = open(out)?;
    match settings.format {
        Format::Csv => table.write_csv(&mut sink)?,
        Format::Json => table.write_json(&mut sink)?,
    }
    sink.flush()?;
    Ok(code)
}

fn open(out: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}
