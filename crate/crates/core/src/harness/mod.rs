//! Reproducible experiment runners.
//!
//! Every operation is a pure function of its spec and seed: each run owns its generator
//! and optimizer state, and parallel results are gathered in input order, so repeated or
//! differently-threaded executions give bit-identical output.

mod critical;
mod decorrelation;
mod output;
mod run;
mod sweep;
mod theorem;
mod training;

pub use critical::{empirical_critical_c, CriticalMode, EmpiricalCritical, EpochLength};
pub use decorrelation::{decorrelation_experiment, DecorrelationResult};
pub use output::{write_csv_atomic, Manifest, OutputDir};
pub use run::{run_online, run_seeds, ExperimentSpec, ProblemSpec, RunResult};
pub use sweep::{in_pool, run_sweep, SweepGrid, SweepResult};
pub use theorem::{theorem1_check, BetaOutcome, Theorem1Result};
pub use training::{final_loss, run_training, tune_learning_rate, TuningResult, DIVERGENCE_FACTOR};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::optim::OptimError;
use crate::problems::ProblemError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("optimizer configuration: {0}")]
    Optim(#[from] OptimError),
    #[error("step {step} failed: {source}")]
    StepFailed {
        step: u64,
        source: OptimError,
        /// Everything recorded up to the failing step.
        partial: Box<RunResult>,
    },
    #[error("diverged at step {step}: loss {loss} exceeds {limit}")]
    Diverged { step: u64, loss: f64, limit: f64, partial: Box<RunResult> },
    #[error("no sign change of the displacement between C={lo} and C={hi}")]
    CriticalNotFound { lo: f64, hi: f64, samples: Vec<(f64, f64)> },
    #[error("no beta1 in the grid moves theta in the correct direction")]
    Theorem1NotFound { outcomes: Vec<BetaOutcome> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
}
