//! Online cost-function streams with analytic gradients.

mod counterexample;
mod illcond;
mod logistic;

pub use counterexample::{
    sequential_gradient, stochastic_gradient_sample, SequentialCounterexample,
    StochasticCounterexample,
};
pub use illcond::{make_ill_conditioned_matrix, two_layer_linear_loss_grad, IllConditionedNet};
pub use logistic::{logreg_loss_grad, make_synthetic_dataset, LogisticTask};

use thiserror::Error;

use crate::optim::BlockPartition;
use crate::rng::StreamRng;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid problem parameter: {0}")]
    InvalidParameter(String),
    #[error("dataset I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset CSV on {path}: {message}")]
    Csv { path: String, message: String },
}

/// The randomness realized for one timestep's cost function.
#[derive(Debug, Clone, PartialEq)]
pub enum Draw {
    /// Linear cost `f_t(θ) = c·θ`.
    Coefficients(Vec<f64>),
    /// Minibatch of sample indices.
    Batch(Vec<usize>),
    /// The cost does not depend on the draw.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

/// A stream of cost functions `f_1, f_2, …` over `θ ∈ R^dim`.
///
/// `draw` realizes the randomness of `f_t` once; `evaluate` then gives the loss and its
/// exact gradient for that realization, so both always refer to the same function.
pub trait OnlineProblem: Send + Sync {
    fn dim(&self) -> usize;

    fn draw(&self, t: u64, rng: &mut StreamRng) -> Draw;

    fn evaluate(&self, theta: &[f64], draw: &Draw) -> Evaluation;

    /// Expected (or full-data) objective, when it exists in closed form.
    fn objective(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Per-coordinate sign of the direction that decreases the expected objective.
    fn optimum_direction(&self) -> Option<Vec<f64>> {
        None
    }

    fn feasible_interval(&self) -> Option<FeasibleInterval> {
        None
    }

    /// Natural block structure of the parameter vector.
    fn partition(&self) -> BlockPartition {
        BlockPartition::single(self.dim())
    }

    /// True when every realized cost is linear, `f_t(θ) = g_t·θ`.
    fn is_linear(&self) -> bool {
        false
    }
}

/// Per-coordinate box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleInterval {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl FeasibleInterval {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ProblemError> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(ProblemError::InvalidParameter(format!(
                "malformed interval lo={lo:?} hi={hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, ProblemError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Coordinate-wise clamp of `theta` into `interval`.
pub fn project_feasible(theta: &mut [f64], interval: &FeasibleInterval) {
    for ((x, lo), hi) in theta.iter_mut().zip(&interval.lo).zip(&interval.hi) {
        *x = x.clamp(*lo, *hi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_clamps() {
        let box1 = FeasibleInterval::uniform(1, -1.0, 1.0).unwrap();
        for (x, want) in [(1.5, 1.0), (0.3, 0.3), (-7.0, -1.0)] {
            let mut th = [x];
            project_feasible(&mut th, &box1);
            assert_eq!(th[0], want);
        }
    }

    #[test]
    fn malformed_interval_rejected() {
        assert!(FeasibleInterval::new(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleInterval::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(FeasibleInterval::new(vec![f64::NAN], vec![1.0]).is_err());
    }
}
