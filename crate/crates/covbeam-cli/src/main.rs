//! Command-line front end for the coverage beamforming studies.
//!
//! Every subcommand reads one optional TOML configuration, runs a study,
//! and publishes CSV data plus a `manifest.toml` echoing the fully resolved
//! inputs. Given the same configuration and seeds, the data files are
//! byte-identical across runs and thread counts; wall-clock facts are
//! quarantined in the manifest's `[timing]` table.

mod config;
mod output;
mod runs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toml::value::{Table, Value};

use crate::output::{Manifest, OutDir};
use crate::runs::RunError;

#[derive(Parser)]
#[command(
    name = "covbeam",
    version,
    about = "Transmit beamforming studies for joint sensing coverage and downlink service"
)]
struct Cli {
    /// TOML configuration; omitted fields take documented defaults
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory, created if missing [default: runs/<command>]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Replace the channel, waveform, and noise seeds with s, s+1, s+2
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,

    /// Publication-scale defaults: 8x8 arrays and a 50x50 lattice
    #[arg(long, global = true)]
    full: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form single-user design, one beampattern cut per threshold
    Single,
    /// Worst-case coverage design versus the communication-only baseline
    Coverage,
    /// Communication-only baseline on its own
    Benchmark,
    /// Constant range-product SNR contours under isotropic transmission
    Cassini,
    /// Discrete-waveform matched-filter check of the SNR model
    Wavesim,
    /// Two-antenna comparison against an exhaustive covariance search
    Oracle,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Single => "single",
            Command::Coverage => "coverage",
            Command::Benchmark => "benchmark",
            Command::Cassini => "cassini",
            Command::Wavesim => "wavesim",
            Command::Oracle => "oracle",
        }
    }
}

/// Cap rayon's pool when COVBEAM_THREADS is set. Results do not depend on
/// the thread count; only the wall time does.
fn configure_threads() {
    let Ok(raw) = std::env::var("COVBEAM_THREADS") else {
        return;
    };
    match raw.parse::<usize>() {
        Ok(n) if n >= 1 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring COVBEAM_THREADS={raw}; expected a positive integer"),
    }
}

fn execute(cli: &Cli, out_path: &Path) -> Result<(), RunError> {
    let file = config::load(cli.config.as_deref())?;
    let resolved = config::resolve(file, cli.full, cli.seed)?;
    let out = OutDir::create(out_path)?;
    let mut manifest = Manifest::new(cli.command.name(), &resolved);
    match cli.command {
        Command::Single => runs::run_single(&resolved, &out, &mut manifest)?,
        Command::Coverage => runs::run_coverage(&resolved, &out, &mut manifest)?,
        Command::Benchmark => runs::run_benchmark(&resolved, &out, &mut manifest)?,
        Command::Cassini => runs::run_cassini(&resolved, &out, &mut manifest)?,
        Command::Wavesim => runs::run_wavesim(&resolved, &out, &mut manifest)?,
        Command::Oracle => runs::run_oracle(&resolved, &out, &mut manifest)?,
    }
    out.write_atomic("manifest.toml", &manifest.render())?;
    println!("wrote {}", out.path().display());
    Ok(())
}

/// Leave a machine-readable account of the failure next to any partial
/// outputs. Best effort: the exit code already carries the class.
fn write_failure_report(out_path: &Path, error: &RunError) {
    let Ok(out) = OutDir::create(out_path) else {
        return;
    };
    let mut table = Table::new();
    table.insert("kind".into(), Value::String(error.kind().into()));
    table.insert(
        "exit_code".into(),
        Value::Integer(i64::from(error.exit_code())),
    );
    table.insert("message".into(), Value::String(error.to_string()));
    if let Ok(text) = toml::to_string_pretty(&Value::Table(table)) {
        let _ = out.write_atomic("failure_report.toml", &text);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let out_path = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(cli.command.name()));
    match execute(&cli, &out_path) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            write_failure_report(&out_path, &error);
            ExitCode::from(error.exit_code())
        }
    }
}
