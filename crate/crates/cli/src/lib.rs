//! Command-line front end for `uscmem`.
//!
//! ```text
//! uscmem <experiment> [--config FILE] [--set key=value]... [--out DIR]
//! ```
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 when a
//! simulation fails numerically.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use uscmem::experiment::{run_experiment, ExperimentKind, ResultBundle};

use crate::config::{parse_document, parse_override, resolve, ConfigError};

/// Environment variable that replaces the default output directory.
pub const OUT_DIR_ENV: &str = "USCMEM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "results";

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "uscmem", version, about = "Adiabatic quantum-memory simulations in the ultrastrong-coupling regime")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one parameter; may be repeated, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory (default: $USCMEM_OUT_DIR or ./results).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Print the resolved parameters before running.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Lowest levels and cat-state fidelities against the coupling.
    Spectrum,
    /// Storage sweep of the input qubit.
    Storage,
    /// Storage followed by retrieval; reports the retrieval curve.
    Retrieval,
    /// Storage and retrieval with the decode phase.
    Roundtrip,
    /// Fidelity over coupling and decode phase for each duration in `t_grid`.
    PhaseMap,
    /// Round trip under the dressed master equation.
    Noisy,
    /// Two-cell storage of a photon-derived Bell state.
    Entangled,
    /// Energies and round-trip fidelity over `fock_grid`.
    Convergence,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Spectrum => ExperimentKind::Spectrum,
            Command::Storage => ExperimentKind::Storage,
            Command::Retrieval => ExperimentKind::Retrieval,
            Command::Roundtrip => ExperimentKind::RoundTrip,
            Command::PhaseMap => ExperimentKind::PhaseMap,
            Command::Noisy => ExperimentKind::Noisy,
            Command::Entangled => ExperimentKind::Entangled,
            Command::Convergence => ExperimentKind::Convergence,
        }
    }
}

/// One-line summary of the scalar results.
pub fn summary(bundle: &ResultBundle) -> String {
    let parts: Vec<String> = bundle.scalars.iter().map(|s| format!("{}={:.6}", s.name, s.value)).collect();
    format!("{}: {}", bundle.kind.as_str(), parts.join(" "))
}

/// Parse `args`, run, write outputs and return the exit status.
pub fn run<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let kind = cli.command.kind();

    let mut assignments = Vec::new();
    if let Some(path) = &cli.config {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return EXIT_INVALID;
            }
        };
        match parse_document(&text) {
            Ok(a) => assignments.extend(a),
            Err(e) => return config_failure(Some(path), e),
        }
    }
    for s in &cli.set {
        match parse_override(s) {
            Ok(a) => assignments.push(a),
            Err(e) => return config_failure(None, e),
        }
    }
    let cfg = match resolve(kind, &assignments) {
        Ok(c) => c,
        Err(e) => return config_failure(cli.config.as_ref(), e),
    };
    if cli.verbose {
        for (k, v) in cfg.spec.canonical_pairs() {
            eprintln!("{k} = {v}");
        }
    }

    let bundle = match run_experiment(&cfg.spec) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return if e.is_validation() { EXIT_INVALID } else { EXIT_NUMERICAL };
        }
    };

    let dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    if let Err(e) = output::write_bundle(&cfg, &bundle, &dir) {
        eprintln!("error: {e}");
        return EXIT_NUMERICAL;
    }
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", summary(&bundle));
    EXIT_OK
}

fn config_failure(path: Option<&PathBuf>, e: ConfigError) -> u8 {
    match path {
        Some(p) => eprintln!("error in {}: {e}", p.display()),
        None => eprintln!("error: {e}"),
    }
    EXIT_INVALID
}
