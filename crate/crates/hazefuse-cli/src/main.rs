//! Command-line pipeline for vision-plus-sensor PM2.5 estimation.
//!
//! Subcommands: `ingest`, `calibrate`, `features`, `correlate`, `evaluate`,
//! `synth`, `report`. Every run writes a `manifest.json` (resolved config,
//! version, seed) beside its outputs, and all randomness flows from the
//! single `--seed` value.
//!
//! Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 2    | usage error (unknown flag or subcommand)  |
//! | 3    | invalid configuration                     |
//! | 4    | i/o error (missing or unwritable path)    |
//! | 5    | data error (schema, parse, validation)    |
//! | 6    | computation error (degenerate input,      |
//! |      | solver non-convergence)                   |

// indexed loops are the clearest form for the matrix emission below
#![allow(clippy::needless_range_loop)]

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::FileConfig;
use hazefuse::error::Error;

#[derive(Parser)]
#[command(name = "hazefuse", version, about = "Vision-plus-sensor PM2.5 estimation pipeline")]
struct Cli {
    /// Flat key=value configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate, and normalize sensor logs, station geometry, and
    /// image manifests into canonical CSVs.
    Ingest(commands::ingest::Args),
    /// Fit or apply the two-segment co-location calibration.
    Calibrate(commands::calibrate::Args),
    /// Extract per-image haze features (mean DCP transmission, β from the
    /// grayscale standard deviation).
    Features(commands::features::Args),
    /// Correlation matrix, correlation-vs-distance fit, factor correlations,
    /// and summary statistics.
    Correlate(commands::correlate::Args),
    /// Leave-sensors-out fusion evaluation matrix with KS significance tests.
    Evaluate(commands::evaluate::Args),
    /// Generate synthetic scenes and sensor fields with known ground truth.
    Synth(commands::synth::Args),
    /// Rebuild report files (p-values, plot data) from a results directory.
    Report(commands::report::Args),
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::InvalidConfig(_) => 3,
        Error::Io { .. } | Error::Csv { .. } | Error::ImageDecode { .. } => 4,
        Error::MissingColumn { .. }
        | Error::InvalidValue(_)
        | Error::LengthMismatch { .. }
        | Error::SchemaMismatch { .. }
        | Error::InsufficientData(_)
        | Error::UndefinedCorrelation(_)
        | Error::ModelFormat(_) => 5,
        Error::DegenerateImage(_) | Error::NonConvergence(_) => 6,
    }
}

fn error_kind(error: &Error) -> &'static str {
    match error {
        Error::InvalidConfig(_) => "invalid_config",
        Error::Io { .. } => "io",
        Error::Csv { .. } => "csv",
        Error::ImageDecode { .. } => "image_decode",
        Error::MissingColumn { .. } => "missing_column",
        Error::InvalidValue(_) => "invalid_value",
        Error::LengthMismatch { .. } => "length_mismatch",
        Error::SchemaMismatch { .. } => "schema_mismatch",
        Error::InsufficientData(_) => "insufficient_data",
        Error::UndefinedCorrelation(_) => "undefined_correlation",
        Error::ModelFormat(_) => "model_format",
        Error::DegenerateImage(_) => "degenerate_image",
        Error::NonConvergence(_) => "non_convergence",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let file_config = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        },
        None => FileConfig::default(),
    };

    let outcome = match cli.command {
        Command::Ingest(args) => commands::ingest::run(args, &file_config),
        Command::Calibrate(args) => commands::calibrate::run(args, &file_config),
        Command::Features(args) => commands::features::run(args, &file_config),
        Command::Correlate(args) => commands::correlate::run(args, &file_config),
        Command::Evaluate(args) => commands::evaluate::run(args, &file_config),
        Command::Synth(args) => commands::synth::run(args, &file_config),
        Command::Report(args) => commands::report::run(args, &file_config),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(error: &Error) -> ExitCode {
    let code = exit_code_for(error);
    // one machine-readable line on stderr
    eprintln!(
        "error: code={code} kind={} message={:?}",
        error_kind(error),
        error.to_string()
    );
    ExitCode::from(code)
}
