//! `pmdkit`: configuration-driven front end for the PMD toolkit.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use config::{BasisOptions, Common, InfidelityOptions, MmmOptions, QberOptions, SimulateOptions, SweepOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<pmd_core::Error> for CliError {
    fn from(e: pmd_core::Error) -> Self {
        match e {
            pmd_core::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pmdkit", version, about = "Fiber PMD emulation and entanglement infidelity analysis")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize a fiber and write its trajectories, DGD spectrum and a synthetic polarimeter scan.
    Simulate(SimulateOptions),
    /// Rolling-window infidelity for H, V, D, A inputs plus the DGD-based bound.
    Infidelity(InfidelityOptions),
    /// Monte Carlo mean infidelity over fiber lengths and filter bandwidths.
    Sweep(SweepOptions),
    /// DGD spectrum from a polarimeter frequency scan.
    Mmm(MmmOptions),
    /// QBER-versus-distance model line, with regression against measured data.
    QberModel(QberOptions),
    /// Error budgets of measurement-basis orientations relative to the PMD vector.
    BasisStudy(BasisOptions),
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the files written.
pub fn run_from<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = cli.common.config.as_deref();
    match cli.command {
        Command::Simulate(o) => commands::simulate::run(o.over(config::load(cfg)?)),
        Command::Infidelity(o) => commands::infidelity::run(o.over(config::load(cfg)?)),
        Command::Sweep(o) => commands::sweep::run(o.over(config::load(cfg)?)),
        Command::Mmm(o) => commands::mmm::run(o.over(config::load(cfg)?)),
        Command::QberModel(o) => commands::qber::run(o.over(config::load(cfg)?)),
        Command::BasisStudy(o) => commands::basis::run(o.over(config::load(cfg)?)),
    }
}
