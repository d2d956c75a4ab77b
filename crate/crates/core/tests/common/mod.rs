//! Oracles shared by the integration test targets.

#![allow(dead_code)]

use adashift_core::problems::{Draw, OnlineProblem};

/// Central finite differences of `f` at `theta` with step `1e-5·(1 + |θ_i|)`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64]) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + theta[i].abs());
            x[i] = theta[i] + h;
            let up = f(&x);
            x[i] = theta[i] - h;
            let down = f(&x);
            x[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / ‖b‖`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(f64::MIN_POSITIVE)
}

/// Relative error between the analytic gradient of `problem` for `draw` and finite
/// differences of its loss.
pub fn gradient_error(problem: &dyn OnlineProblem, theta: &[f64], draw: &Draw) -> f64 {
    let analytic = problem.evaluate(theta, draw).gradient;
    let numeric = central_difference(|x| problem.evaluate(x, draw).loss, theta);
    relative_error(&numeric, &analytic)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
