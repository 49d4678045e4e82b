//! Config-driven experiments for the insurer optimal-control library.
//!
//! Each subcommand is a pure function of the configuration (and seed) to
//! output bytes: JSON reports use 17-significant-digit floats, CSV tables
//! the same, and all Monte Carlo reductions run in path order.

pub mod commands;
pub mod config;
pub mod report;

use std::path::Path;

use insurer_control_core::evaluation::EvalError;
use insurer_control_core::{Executor, SimError, SolveError};
use rayon::prelude::*;

pub use commands::{execute, Command, CommandOutput, RunOptions};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
}

impl LabError {
    /// 1 for I/O and configuration errors, 2 for violated mathematical
    /// preconditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io(_) | LabError::Config(_) => 1,
            LabError::Solve(SolveError::GridMismatch { .. } | SolveError::InitialWealth(_)) => 1,
            LabError::Solve(_) => 2,
            LabError::Simulation(SimError::Inadmissible(_) | SimError::InitialDensity(_)) => 2,
            LabError::Simulation(_) => 1,
            LabError::Evaluation(EvalError::Domain { .. }) => 2,
            LabError::Evaluation(EvalError::Simulation(e)) => LabError::Simulation(e.clone()).exit_code(),
            LabError::Evaluation(_) => 1,
        }
    }
}

/// Exit code of a verification run whose verdict is FAIL.
pub const EXIT_VERIFICATION_FAILED: i32 = 3;

/// Path-parallel executor on the current rayon pool. Results come back in
/// index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, LabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| LabError::Io(e.to_string()))?;
    Ok(pool.install(f))
}

/// Writes the report and tables of `output` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, output: &CommandOutput) -> Result<(), LabError> {
    let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{}.json", output.name)), &output.json).map_err(io)?;
    for (name, body) in &output.tables {
        std::fs::write(dir.join(name), body).map_err(io)?;
    }
    Ok(())
}
