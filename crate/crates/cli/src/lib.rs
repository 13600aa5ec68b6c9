//! `ecd`: norm computations, bound campaigns and spec validation from JSON
//! configs.

pub mod config;
pub mod error;
pub mod experiments;
pub mod norm;
pub mod output;
pub mod validate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ecd_core::sdp::SolverOptions;

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ecd", version, about = "Energy-constrained diamond norms and continuity bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify ‖N₁ − N₂‖⋄E and write the certificate JSON.
    Norm {
        #[command(flatten)]
        common: Common,
        /// Also write the assembled problem JSON here.
        #[arg(long)]
        emit_problem: Option<PathBuf>,
    },
    /// Run a named experiment and write CSV plus JSON lines.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Check a channel spec: Kraus completeness, Hermiticity, energy limit.
    Validate {
        /// Channel spec JSON.
        path: PathBuf,
        /// Input and output spectrum for the energy-limit check (defaults to
        /// the number operator).
        #[arg(long, value_delimiter = ',')]
        spectrum: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output path; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Truncation dimension; overrides the config's `truncation_dim`.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub gap_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    /// Loads the config and applies the command-line overrides.
    pub fn load(&self) -> Result<(ExperimentConfig, SolverOptions), CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(d) = self.dim {
            cfg.truncation_dim = d;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.validate()?;
        let mut opts = SolverOptions::default();
        if let Some(g) = self.gap_tol {
            if g.is_nan() || g <= 0.0 {
                return Err(CliError::Config(format!("--gap-tol must be positive, got {g}")));
            }
            opts.gap_tol = g;
        }
        if let Some(m) = self.max_iter {
            opts.max_iter = m;
        }
        Ok((cfg, opts))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Norm { common, emit_problem } => {
            let (cfg, opts) = common.load()?;
            norm::run_norm(&cfg, &opts, emit_problem.as_deref())
        }
        Command::Experiment { common } => {
            let (cfg, opts) = common.load()?;
            experiments::run_experiment(&cfg, &opts)
        }
        Command::Validate { path, spectrum } => validate::run_validate(&path, spectrum.as_deref()),
    }
}
