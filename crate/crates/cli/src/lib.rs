//! `gsteg` experiment harness: config loading, subcommand dispatch and
//! CSV/markdown emission.

mod commands;
pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::{load_config, parse_config, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pipeline(#[from] gsteg_pipeline::PipelineError),
    #[error(transparent)]
    Optimize(#[from] gsteg_optimizer::OptimizeError),
    #[error(transparent)]
    Codec(#[from] gsteg_codec::CodecError),
    #[error(transparent)]
    Channel(#[from] gsteg_channels::ChannelError),
    #[error(transparent)]
    Analysis(#[from] gsteg_analysis::AnalysisError),
    #[error(transparent)]
    Gaussianity(#[from] gsteg_gaussianity::GaussianityError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gsteg", version, about = "Diffusion-model noise steganography at desk scale")]
pub struct Cli {
    /// Base seed for every stochastic step of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for batch sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Directory for output files; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    Pixel,
    Latent,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a payload file into a stego tensor.
    Hide {
        #[arg(long)]
        payload: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the payload bytes from a stego tensor.
    Extract {
        #[arg(long)]
        stego: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one channel to a tensor file.
    Attack {
        /// `kind:params`, e.g. `awgn:0.1` or `dct_compress:8,75`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Supplies the autoencoder for `autoencoder_cycle`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// BAR per capacity and attack, averaged over seeds.
    Robustness {
        #[arg(long)]
        config: PathBuf,
        /// Capacities; defaults to `attacks.q`.
        #[arg(long, value_delimiter = ',')]
        q: Vec<u32>,
        /// Scale per capacity (one value, or one per Q); defaults to `codec.s`.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
    },
    /// Adaptive search for the scale factor.
    OptimizeS {
        #[arg(long)]
        q: u32,
        #[arg(long, value_enum)]
        pipeline: PipelineArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Analytic cumulants and KL over a (Q, S) grid.
    KlTable {
        /// Comma-separated capacities.
        #[arg(long)]
        q: String,
        /// Comma-separated scales or `start:stop:count`.
        #[arg(long)]
        s: String,
    },
    /// Radially averaged power spectrum of a tensor, or of stego and control
    /// residuals generated from a config.
    Spectrum {
        #[arg(long, conflicts_with = "config")]
        input: Option<PathBuf>,
        /// Subtracted from `input` before the transform.
        #[arg(long, requires = "input")]
        baseline: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        batch: usize,
    },
    /// Stego and control residual histograms on a shared grid.
    Residuals {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 64)]
        batch: usize,
    },
    /// Optimize both pipelines, sweep attacks and tabulate KL.
    TradeoffReport {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Runs the harness; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gsteg: {e}");
            e.exit_code()
        }
    }
}
