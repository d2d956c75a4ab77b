use rand::Rng;
use rayon::prelude::*;

use super::{check_unit_interval, default_horizon, AnalysisError};
use crate::problems::{stochastic_gradient_sample, StochasticCounterexample};
use crate::rng::substream;

/// How the variance of Adam's `v` under i.i.d. gradients enters the second-order
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceModel {
    /// Stationary variance of the exponential average, `D[v] = (1−β2)/(1+β2)·D[g²]`, with
    /// moments of the two-point gradient distribution computed exactly.
    #[default]
    Stationary,
    /// `D[v] = D[g²]` and `E[g²] = C + δ(C+1)`, `D[g²] = C³−2C²+C + δ(C³−3C²−C−1) −
    /// δ²(C+1)²`, as the original derivation writes them. Kept for comparison; these
    /// overstate the variance by a factor of about `(1+β2)/(1−β2)`.
    AsPrinted,
}

fn moments(problem: &StochasticCounterexample, model: VarianceModel) -> (f64, f64) {
    match model {
        VarianceModel::Stationary => (problem.second_moment(), problem.squared_variance()),
        VarianceModel::AsPrinted => {
            let (c, d) = (problem.c, problem.delta);
            let e2 = c + d * (c + 1.0);
            let var = c.powi(3) - 2.0 * c * c + c + d * (c.powi(3) - 3.0 * c * c - c - 1.0)
                - d * d * (c + 1.0).powi(2);
            (e2, var)
        }
    }
}

/// Summands `(1−β1)β1^t·[E[X_t]^{−1/2} + 3/8·D[X_t]·E[X_t]^{−5/2}]`, `t = 0..=horizon`, of
/// the second-order expected net update factor of a gradient `g_value` (with `α = 1`),
/// where `X_t` is the `v` that scales the gradient `t` steps after it arrived:
///
/// - `E[X_t] = (1 + β2^{t+1} − β2^t)·E[g²] + (1−β2)β2^t·g_value²`
/// - `D[X_t] = [β2^{2(t+1)}·ρ + (1−β2)²(1−β2^{2t})/(1−β2²)]·D[g²]`, with `ρ = (1−β2)/(1+β2)`
///   for [`VarianceModel::Stationary`] and `ρ = 1` for [`VarianceModel::AsPrinted`].
pub fn expected_k_terms(
    problem: &StochasticCounterexample,
    beta1: f64,
    beta2: f64,
    g_value: f64,
    horizon: usize,
    model: VarianceModel,
) -> Result<Vec<f64>, AnalysisError> {
    check_unit_interval("beta1", beta1, false)?;
    check_unit_interval("beta2", beta2, false)?;
    let (e2, var2) = moments(problem, model);
    let v_ratio = match model {
        VarianceModel::Stationary => (1.0 - beta2) / (1.0 + beta2),
        VarianceModel::AsPrinted => 1.0,
    };
    let mut terms = Vec::with_capacity(horizon + 1);
    let mut w = 1.0 - beta1;
    for t in 0..=horizon as i32 {
        let b_t = beta2.powi(t);
        let mean = (1.0 + beta2 * b_t - b_t) * e2 + (1.0 - beta2) * b_t * g_value * g_value;
        let var = (beta2.powi(2 * (t + 1)) * v_ratio
            + (1.0 - beta2).powi(2) * (1.0 - b_t * b_t) / (1.0 - beta2 * beta2))
            * var2;
        terms.push(w * (mean.powf(-0.5) + 0.375 * var * mean.powf(-2.5)));
        w *= beta1;
    }
    Ok(terms)
}

/// Sum of [`expected_k_terms`].
pub fn expected_k_second_order(
    problem: &StochasticCounterexample,
    beta1: f64,
    beta2: f64,
    g_value: f64,
    horizon: usize,
    model: VarianceModel,
) -> Result<f64, AnalysisError> {
    Ok(expected_k_terms(problem, beta1, beta2, g_value, horizon, model)?.iter().sum())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std_error: (var / n).sqrt(), samples: xs.len() }
    }

    /// `[mean − zσ, mean + zσ]`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }
}

/// Monte-Carlo expected net update factor of a gradient equal to `g_value` on the
/// stochastic counterexample, with `α = 1` and no bias correction.
///
/// Each run (its own sub-stream of `seed`) starts `v` at `E[g²]`, burns it in for
/// `⌈10/(1−β2)⌉` i.i.d. gradients, injects `g_value`, and sums
/// `(1−β1)β1^j/√v` over the next `horizon + 1` steps. Runs for different `g_value` with the
/// same seed share their random draws.
pub fn monte_carlo_expected_k(
    problem: &StochasticCounterexample,
    beta1: f64,
    beta2: f64,
    g_value: f64,
    horizon: usize,
    runs: usize,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    check_unit_interval("beta1", beta1, false)?;
    check_unit_interval("beta2", beta2, false)?;
    if runs < 2 {
        return Err(AnalysisError::InvalidParameter(format!("need at least 2 runs, got {runs}")));
    }
    let burn_in = (10.0 / (1.0 - beta2)).ceil() as usize;
    let start_v = problem.second_moment();
    let (c, delta) = (problem.c, problem.delta);
    let samples: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = substream(seed, run);
            let mut v = start_v;
            for _ in 0..burn_in {
                let g = stochastic_gradient_sample(c, delta, &mut rng);
                v = beta2 * v + (1.0 - beta2) * g * g;
            }
            v = beta2 * v + (1.0 - beta2) * g_value * g_value;
            let mut w = 1.0 - beta1;
            let mut k = w / v.sqrt();
            for _ in 0..horizon {
                let g = stochastic_gradient_sample(c, delta, &mut rng);
                v = beta2 * v + (1.0 - beta2) * g * g;
                w *= beta1;
                k += w / v.sqrt();
            }
            k
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}

/// Distribution of a `v` drawn independently of the gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VDistribution {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl VDistribution {
    fn validate(&self) -> Result<(), AnalysisError> {
        let ok = match *self {
            VDistribution::Constant(v) => v > 0.0 && v.is_finite(),
            VDistribution::Uniform { lo, hi } => lo > 0.0 && hi >= lo && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(AnalysisError::InvalidParameter(format!("v distribution {self:?} must be positive")))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            VDistribution::Constant(v) => v,
            VDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// Empirical mean net update factor of one gradient value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMean {
    pub g_value: f64,
    pub estimate: McEstimate,
}

const DRAWS_PER_STREAM: usize = 4096;

/// Mean net update factor per gradient class when every step's `v` is an independent
/// draw from `v_dist`, with gradients from the stochastic counterexample.
///
/// Returns the classes `C` and `−1`, in that order.
pub fn theorem2_expected_k(
    problem: &StochasticCounterexample,
    v_dist: VDistribution,
    alpha: f64,
    beta1: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<ClassMean>, AnalysisError> {
    v_dist.validate()?;
    check_unit_interval("beta1", beta1, false)?;
    if draws < 2 {
        return Err(AnalysisError::InvalidParameter(format!("need at least 2 draws, got {draws}")));
    }
    let horizon = default_horizon(beta1);
    let chunks = draws.div_ceil(DRAWS_PER_STREAM);
    let per_chunk: Vec<Vec<(bool, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = substream(seed, chunk as u64);
            let n = DRAWS_PER_STREAM.min(draws - chunk * DRAWS_PER_STREAM);
            (0..n)
                .map(|_| {
                    let large = problem.sample(&mut rng) == problem.c;
                    let mut w = 1.0 - beta1;
                    let mut k = 0.0;
                    for _ in 0..=horizon {
                        k += w * alpha / v_dist.sample(&mut rng).sqrt();
                        w *= beta1;
                    }
                    (large, k)
                })
                .collect()
        })
        .collect();
    let (mut large, mut small) = (Vec::new(), Vec::new());
    for (is_large, k) in per_chunk.into_iter().flatten() {
        if is_large {
            large.push(k);
        } else {
            small.push(k);
        }
    }
    if large.len() < 2 || small.len() < 2 {
        return Err(AnalysisError::Degenerate(format!(
            "too few draws per class ({} large, {} small)",
            large.len(),
            small.len()
        )));
    }
    Ok(vec![
        ClassMean { g_value: problem.c, estimate: McEstimate::from_samples(&large) },
        ClassMean { g_value: -1.0, estimate: McEstimate::from_samples(&small) },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_problem() -> StochasticCounterexample {
        StochasticCounterexample::new(101.0, 0.02).unwrap()
    }

    #[test]
    fn large_gradient_gets_smaller_factor() {
        let p = reference_problem();
        let kc = expected_k_second_order(&p, 0.0, 0.999, 101.0, 0, VarianceModel::Stationary).unwrap();
        let km = expected_k_second_order(&p, 0.0, 0.999, -1.0, 0, VarianceModel::Stationary).unwrap();
        assert!(kc < km);
    }

    #[test]
    fn unit_c_gives_equal_factors() {
        let p = StochasticCounterexample::new(1.0, 0.5).unwrap();
        for model in [VarianceModel::Stationary, VarianceModel::AsPrinted] {
            let a = expected_k_terms(&p, 0.5, 0.99, 1.0, 20, model).unwrap();
            let b = expected_k_terms(&p, 0.5, 0.99, -1.0, 20, model).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_term_mc_is_inverse_root_v() {
        let p = reference_problem();
        let est = monte_carlo_expected_k(&p, 0.0, 0.99, -1.0, 0, 200, 3).unwrap();
        assert!(est.mean > 0.0 && est.std_error > 0.0);
        assert_eq!(est.samples, 200);
        let again = monte_carlo_expected_k(&p, 0.0, 0.99, -1.0, 0, 200, 3).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn constant_v_gives_exact_factor() {
        let p = reference_problem();
        let classes = theorem2_expected_k(&p, VDistribution::Constant(4.0), 0.5, 0.0, 10_000, 1).unwrap();
        for cls in classes {
            assert_eq!(cls.estimate.mean, 0.25);
            assert_eq!(cls.estimate.std_error, 0.0);
        }
        assert!(theorem2_expected_k(&p, VDistribution::Uniform { lo: 0.0, hi: 1.0 }, 1.0, 0.0, 100, 1).is_err());
    }
}
