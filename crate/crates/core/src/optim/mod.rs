//! Optimizer configuration, state and update rules.
//!
//! All five algorithms are instances of the same update
//! `θ ← θ − α_t · m_t / (√v_t + ε)` and differ only in how `m_t` and `v_t` are built:
//!
//! | algorithm | `m_t`                              | `v_t`                                  |
//! |-----------|------------------------------------|----------------------------------------|
//! | SGD       | `g_t`                              | 1                                      |
//! | Momentum  | EMA of `g`                         | 1                                      |
//! | Adam      | EMA of `g` (bias corrected)        | EMA of `g²` (bias corrected)           |
//! | AMSGrad   | as Adam                            | running max of Adam's `v`              |
//! | AdaShift  | truncated average of the newest `m_window` gradients | EMA of `φ(g²_{t−n})` per block |

mod config;
mod partition;
mod state;
mod step;

pub use config::{Algorithm, LrSchedule, OptimizerConfig, SpatialOp};
pub use partition::{Block, BlockPartition, ParamBlock};
pub use state::OptimizerState;
pub use step::{
    adam_step, adashift_step, amsgrad_step, momentum_step, moving_average_m, run_step, sgd_step,
    spatial_reduce, Optimizer, SpatialValue, StepOutcome,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("unknown algorithm `{0}` (expected sgd, momentum, adam, amsgrad or adashift)")]
    UnknownAlgorithm(String),
    #[error("invalid block partition: {0}")]
    Partition(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite gradient at coordinate {index} on step {step}")]
    NonFiniteGradient { step: u64, index: usize },
    #[error("non-finite parameter at coordinate {index} after step {step}")]
    NonFiniteParameter { step: u64, index: usize },
    #[error("spatial reduction of an empty block")]
    EmptyBlock,
}
