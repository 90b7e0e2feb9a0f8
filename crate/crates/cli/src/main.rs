//! `hhg`: command-line driver for the simulation and analysis pipeline.
//!
//! Every subcommand reads the run configuration, writes its products into
//! the output directory and updates `manifest.txt` there. `run` stores the
//! ensemble record; the analysis subcommands read it back without
//! propagating again.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hhg_core::Error as CoreError;

#[derive(Parser, Debug)]
#[command(name = "hhg", version, about = "Harmonic generation from a 1D model atom in a disordered environment")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the ensemble propagation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Ensemble record read by the analysis subcommands [default: OUT/records.bin].
    #[arg(long, global = true)]
    pub records: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Relax the field-free ground state of the bare atom.
    GroundState,
    /// Sample the environment configurations of the ensemble.
    SampleEnv,
    /// Propagate the ensemble and store the record.
    Run,
    /// Harmonic spectrum of the ensemble-averaged dipole acceleration.
    Spectrum {
        /// Use a single configuration instead of the ensemble mean.
        #[arg(long)]
        member: Option<usize>,
        /// Apply a Hann taper before the transform.
        #[arg(long)]
        hann: bool,
    },
    /// Time-frequency map of the dipole acceleration.
    Gabor {
        #[arg(long)]
        member: Option<usize>,
        /// Highest harmonic order kept [default: 1.5 x classical cutoff].
        #[arg(long)]
        max_order: Option<f64>,
    },
    /// Total and photoelectron purity with the exponential-decay fits.
    Purity,
    /// Ensemble density over time and the density matrix at one probe time.
    DensityMap {
        /// Probe index for the density matrix [default: middle of the plateau].
        #[arg(long)]
        probe: Option<usize>,
        /// Half width of the density-matrix region (a.u.).
        #[arg(long, default_value_t = 60.0)]
        x_limit: f64,
        /// Grid stride inside the region.
        #[arg(long, default_value_t = 4)]
        stride: usize,
        /// Skip the photoelectron mask.
        #[arg(long)]
        unmasked: bool,
    },
    /// Simple-man returns to the origin and to the perturber shells.
    Sfa {
        /// Return distances in a.u., comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50,60")]
        ell_list: Vec<f64>,
        /// Birth times sampled per optical cycle.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Laser-driven periodic orbits by Newton shooting.
    Orbits {
        /// Anchor times in optical cycles, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,2.5")]
        t0: Vec<f64>,
    },
    /// Pair-distance histogram of the sampled environments.
    PairCorrelation {
        #[arg(long, default_value_t = 0.25)]
        bin_width: f64,
        /// Largest distance histogrammed [default: 8 mean spacings].
        #[arg(long)]
        r_max: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::SampleEnv => "sample-env",
            Command::Run => "run",
            Command::Spectrum { .. } => "spectrum",
            Command::Gabor { .. } => "gabor",
            Command::Purity => "purity",
            Command::DensityMap { .. } => "density-map",
            Command::Sfa { .. } => "sfa",
            Command::Orbits { .. } => "orbits",
            Command::PairCorrelation { .. } => "pair-correlation",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(CoreError),
    #[error("cannot read config {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("required file {path} is missing; {hint}")]
    MissingArtifact { path: PathBuf, hint: &'static str },
    #[error("{0}")]
    Numerical(CoreError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(CoreError),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => 2,
            CliError::MissingArtifact { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } | CliError::Data(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ConfigSyntax { .. } | CoreError::ConfigRange { .. } | CoreError::InvalidParameter { .. } => CliError::Config(e),
            CoreError::Io(source) => CliError::io("i/o error", source),
            CoreError::Format(_) | CoreError::Misaligned(_) => CliError::Data(e),
            other => CliError::Numerical(other),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::execute(&cli.common, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
