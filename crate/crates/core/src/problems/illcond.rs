use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Draw, Evaluation, OnlineProblem, ProblemError};
use crate::optim::BlockPartition;
use crate::rng::{seeded, StreamRng};

/// Diagonal `dim × dim` matrix with entries geometrically spaced from 1 to `kappa`.
pub fn make_ill_conditioned_matrix(dim: usize, kappa: f64) -> Result<DMatrix<f64>, ProblemError> {
    if dim == 0 || !(kappa >= 1.0 && kappa.is_finite()) || (dim == 1 && kappa != 1.0) {
        return Err(ProblemError::InvalidParameter(format!(
            "cannot build a {dim}x{dim} matrix with condition number {kappa}"
        )));
    }
    let diag = (0..dim).map(|i| {
        if dim == 1 {
            1.0
        } else {
            kappa.powf(i as f64 / (dim - 1) as f64)
        }
    });
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, diag)))
}

/// `‖W1·W2 − A‖²_F` and its gradients `2(W1W2 − A)W2ᵀ`, `2W1ᵀ(W1W2 − A)`.
pub fn two_layer_linear_loss_grad(
    a: &DMatrix<f64>,
    w1: &DMatrix<f64>,
    w2: &DMatrix<f64>,
) -> (f64, DMatrix<f64>, DMatrix<f64>) {
    let residual = w1 * w2 - a;
    let loss = residual.norm_squared();
    let g1 = 2.0 * &residual * w2.transpose();
    let g2 = 2.0 * w1.transpose() * &residual;
    (loss, g1, g2)
}

/// Two-layer linear network fitted to a badly conditioned target.
///
/// With inputs `x ~ N(0, I)` the objective `E‖W1W2x − Ax‖²` equals `‖W1W2 − A‖²_F`; the
/// closed form is used directly. Parameters are `[vec(W1), vec(W2)]` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct IllConditionedNet {
    pub a: DMatrix<f64>,
}

impl IllConditionedNet {
    pub fn new(dim: usize, kappa: f64) -> Result<Self, ProblemError> {
        Ok(Self { a: make_ill_conditioned_matrix(dim, kappa)? })
    }

    pub fn width(&self) -> usize {
        self.a.nrows()
    }

    /// Row-major flattening.
    pub fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
        m.transpose().iter().copied().collect()
    }

    pub fn unflatten(&self, theta: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.width();
        (
            DMatrix::from_row_slice(n, n, &theta[..n * n]),
            DMatrix::from_row_slice(n, n, &theta[n * n..]),
        )
    }

    /// Identity plus `N(0, sigma²)` noise for both factors.
    pub fn initial_theta(&self, sigma: f64, seed: u64) -> Vec<f64> {
        let n = self.width();
        let mut rng = seeded(seed);
        (0..2 * n * n)
            .map(|k| {
                let (r, c) = ((k % (n * n)) / n, k % n);
                let eye = if r == c { 1.0 } else { 0.0 };
                let z: f64 = rng.sample(StandardNormal);
                eye + sigma * z
            })
            .collect()
    }
}

impl OnlineProblem for IllConditionedNet {
    fn dim(&self) -> usize {
        2 * self.width() * self.width()
    }

    fn draw(&self, _t: u64, _rng: &mut StreamRng) -> Draw {
        Draw::Deterministic
    }

    fn evaluate(&self, theta: &[f64], _draw: &Draw) -> Evaluation {
        let (w1, w2) = self.unflatten(theta);
        let (loss, g1, g2) = two_layer_linear_loss_grad(&self.a, &w1, &w2);
        let mut gradient = Self::flatten(&g1);
        gradient.extend(Self::flatten(&g2));
        Evaluation { loss, gradient }
    }

    fn objective(&self, theta: &[f64]) -> Option<f64> {
        Some(self.evaluate(theta, &Draw::Deterministic).loss)
    }

    fn partition(&self) -> BlockPartition {
        let nn = self.width() * self.width();
        BlockPartition::from_sizes(&[("w1", nn), ("w2", nn)]).expect("non-empty layers")
    }
}
