//! AdaShift and its baselines (SGD, Momentum, Adam, AMSGrad) over block-partitioned
//! parameter vectors, together with the test problems and analysis routines used to
//! study why Adam-style methods can fail to converge.
//!
//! The crate is split into four layers:
//!
//! - [`optim`]: optimizer configuration, state and the per-algorithm update rules.
//! - [`problems`]: online cost-function streams with analytic gradients.
//! - [`analysis`]: net update factors, closed-form limits, critical conditions,
//!   expectation approximations with Monte-Carlo oracles, correlations and regret.
//! - [`harness`]: reproducible experiment runners, sweeps and CSV output.

// Negated comparisons such as `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod harness;
pub mod optim;
pub mod problems;
pub mod rng;

pub use optim::{
    Algorithm, BlockPartition, LrSchedule, OptimError, Optimizer, OptimizerConfig, OptimizerState,
    ParamBlock, SpatialOp,
};
