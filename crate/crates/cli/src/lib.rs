//! Command implementations behind the `qbat` binary.
//!
//! Every command reads a flat JSON [`Config`], runs the engine and writes
//! plot-ready CSV or JSON into an output directory. Numbers are written with
//! twelve significant digits so reruns are byte-identical.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_convergence, cmd_evolve, cmd_fit, cmd_phase_diagram, cmd_sweep, run_point, FitMode,
    PhaseRow, PointSummary, PHASE_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use config::{Config, GridPoint};

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] qbat::Error),
}

impl CliError {
    /// `3` for numerical failures of the engine, `2` for everything the user
    /// can fix by changing the invocation or the config.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
