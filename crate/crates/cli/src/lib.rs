//! Batch front end for `ionsim-core`: fringe sweeps, Allan scans and pulse
//! compilation driven by a JSON run configuration.

// `!(x > 0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ionsim", version, about = "Trapped-ion nonlinear interferometer simulator")]
pub struct Cli {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output directory, created if needed.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Print the default configuration and exit.
    #[arg(long)]
    pub print_defaults: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the phase segment, write the fringe CSV and a fit report.
    Fringe,
    /// Sample shots at the operating point, write the Allan-deviation CSV.
    Allan,
    /// Compile an operator expression into a pulse program and verify it.
    Compile {
        /// Expression file, one `SPIN p q RE IM` term per line.
        expr: PathBuf,
        /// Evolution time (overrides `compile.time`).
        #[arg(long)]
        time: Option<f64>,
        /// Gadget step size (overrides `compile.delta_t`).
        #[arg(long)]
        delta_t: Option<f64>,
        /// Maximum gadget nesting depth (overrides `compile.depth`).
        #[arg(long)]
        depth: Option<usize>,
    },
}

/// Loads the config file (or defaults) and applies command-line overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Input {
                path: path.clone(),
                source,
            })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(Command::Compile {
        time, delta_t, depth, ..
    }) = &cli.command
    {
        if let Some(t) = time {
            cfg.compile.time = *t;
        }
        if let Some(d) = delta_t {
            cfg.compile.delta_t = *d;
        }
        if let Some(d) = depth {
            cfg.compile.depth = *d;
        }
    }
    Ok(cfg)
}

/// Runs one command and returns the files it wrote; `--print-defaults`
/// returns the defaults as text instead.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if cli.print_defaults {
        return Ok(Outcome::Text(RunConfig::default().to_json()));
    }
    let cfg = load_config(cli)?;
    let written = match &cli.command {
        Some(Command::Fringe) => commands::fringe(&cfg, &cli.out)?,
        Some(Command::Allan) => commands::allan(&cfg, &cli.out)?,
        Some(Command::Compile { expr, .. }) => commands::compile(&cfg, expr, &cli.out)?,
        None => {
            return Err(CliError::Config {
                key: "<command>".into(),
                message: "no subcommand given (fringe, allan or compile)".into(),
            })
        }
    };
    Ok(Outcome::Written(written))
}

#[derive(Debug)]
pub enum Outcome {
    Text(String),
    Written(Vec<PathBuf>),
}
