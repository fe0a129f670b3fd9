//! Reproducible runs: phantoms, forward data, inversions and reports, each
//! writing a directory with a manifest from which the run can be repeated.

mod bundle;
mod commands;
mod config;
mod phantom;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use bundle::{sha256_hex, BundleWriter, Manifest, Status, CONFIG, MANIFEST};
pub use commands::{
    cmd_forward, cmd_invert, cmd_phantom, cmd_report, truth_coefficient, HistoryRow, InnerRow, InvertOutcome, Report,
    StageRow, FINAL_FILE, HISTORY_FILE, INNER_FILE, MEASUREMENT_FILE, METRICS_FILE, PHANTOM_FILE,
};
pub use config::{ForwardQuadrature, OuterBoundary, RunConfig};
pub use phantom::{Phantom, Profile};

use crate::error::Error;
use crate::forward_data::MeasurementSet;
use crate::grid_fem::ScalarField;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::IncompleteBundle(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(name = "layerstrip", version, about = "Absorption reconstruction by layer stripping")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML configuration; defaults apply to absent keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured example (1, 2 or 3).
    #[arg(long)]
    pub example: Option<u8>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the absorption map of an example.
    Phantom {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate and preprocess the measurements.
    Forward {
        #[command(flatten)]
        common: Common,
        /// Absorption map to use instead of the configured example.
        #[arg(long)]
        phantom: Option<PathBuf>,
    },
    /// Reconstruct the coefficient from a measurement file.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Measurement file written by `forward`.
        measurements: PathBuf,
        /// Absorption map to score the run against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Score a finished bundle and write its curves.
    Report {
        /// Bundle written by `invert`.
        bundle: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Report directory; `<bundle>/report` by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> crate::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(example) = common.example {
        cfg.example = example;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: Command) -> crate::Result<String> {
    match command {
        Command::Phantom { common } => {
            let cfg = load_config(&common)?;
            let mu = cmd_phantom(&cfg, Some(&common.out))?;
            Ok(format!("phantom: example {} mu_a in [{}, {}]", cfg.example, mu.min(), mu.max()))
        }
        Command::Forward { common, phantom } => {
            let cfg = load_config(&common)?;
            let mu = match phantom {
                Some(path) => ScalarField::read(path)?,
                None => cmd_phantom(&cfg, None)?,
            };
            let data = cmd_forward(&cfg, &mu, Some(&common.out))?;
            Ok(format!("forward: {} sources, {} points each", data.traces().len(), data.layout().len()))
        }
        Command::Invert { common, measurements, truth } => {
            let cfg = load_config(&common)?;
            let data = MeasurementSet::read(measurements)?;
            let truth = truth.map(ScalarField::read).transpose()?;
            let run = cmd_invert(&cfg, &data, truth.as_ref(), Some(&common.out))?;
            let mut msg = format!("invert: accelerator {} iterations", run.accelerator.iterations());
            if let Some(m) = run.metrics {
                msg.push_str(&format!("\n{m}"));
            }
            Ok(msg)
        }
        Command::Report { bundle, truth, out } => {
            let truth = ScalarField::read(truth)?;
            let report = cmd_report(&bundle, &truth, out.as_deref())?;
            Ok(report.metrics.to_string())
        }
    }
}

/// Parse arguments, run the subcommand and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
