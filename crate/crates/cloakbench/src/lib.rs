//! Experiment harness for the `cloak` crate: loss sweeps with exponent fits,
//! control runs, resonance profiles, three-sphere experiments and the
//! verification suites driven by the `cloakbench` binary.

pub mod config;
pub mod lab;
pub mod output;
pub mod resonance;
pub mod sweep;
pub mod verify;

use cloak::media::MediaError;
use cloak::solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("solver failed at delta = {delta}: {source}")]
    Solver {
        delta: f64,
        #[source]
        source: SolverError,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            _ => 1,
        }
    }
}
