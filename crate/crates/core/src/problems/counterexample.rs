use rand::Rng;

use super::{Draw, Evaluation, FeasibleInterval, OnlineProblem, ProblemError};
use crate::rng::StreamRng;

/// Gradient of the periodic counterexample at step `t ≥ 1`: `C` on the first step of every
/// epoch of length `d`, `−1` otherwise.
pub fn sequential_gradient(c: f64, d: u64, t: u64) -> f64 {
    assert!(t >= 1 && d >= 1, "steps and epochs are 1-based");
    if (t - 1).is_multiple_of(d) {
        c
    } else {
        -1.0
    }
}

/// One i.i.d. gradient of the stochastic counterexample: `C` with probability
/// `(1+δ)/(C+1)`, `−1` otherwise.
///
/// Consumes exactly one uniform draw, so streams for different `C` built from the same
/// seed are coupled.
pub fn stochastic_gradient_sample(c: f64, delta: f64, rng: &mut StreamRng) -> f64 {
    let u: f64 = rng.random();
    if u < (1.0 + delta) / (c + 1.0) {
        c
    } else {
        -1.0
    }
}

fn linear_eval(theta: &[f64], draw: &Draw) -> Evaluation {
    let Draw::Coefficients(c) = draw else {
        panic!("linear counterexamples expect coefficient draws, got {draw:?}")
    };
    let loss = c.iter().zip(theta).map(|(a, b)| a * b).sum();
    Evaluation { loss, gradient: c.clone() }
}

/// `f_t(θ) = Cθ` when `t mod d = 1`, `−θ` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialCounterexample {
    pub c: f64,
    pub d: u64,
    pub interval: FeasibleInterval,
}

impl SequentialCounterexample {
    pub fn new(c: f64, d: u64) -> Result<Self, ProblemError> {
        if !(c.is_finite() && c > 0.0) || d == 0 {
            return Err(ProblemError::InvalidParameter(format!(
                "sequential counterexample needs C > 0 and d >= 1, got C={c}, d={d}"
            )));
        }
        Ok(Self { c, d, interval: FeasibleInterval::uniform(1, -1.0, 1.0)? })
    }

    /// Gradient summed over one epoch: `C − (d − 1)`.
    pub fn epoch_gradient_sum(&self) -> f64 {
        self.c - (self.d as f64 - 1.0)
    }
}

impl OnlineProblem for SequentialCounterexample {
    fn dim(&self) -> usize {
        1
    }

    fn draw(&self, t: u64, _rng: &mut StreamRng) -> Draw {
        Draw::Coefficients(vec![sequential_gradient(self.c, self.d, t)])
    }

    fn evaluate(&self, theta: &[f64], draw: &Draw) -> Evaluation {
        linear_eval(theta, draw)
    }

    fn objective(&self, theta: &[f64]) -> Option<f64> {
        Some(self.epoch_gradient_sum() / self.d as f64 * theta[0])
    }

    fn optimum_direction(&self) -> Option<Vec<f64>> {
        Some(vec![-self.epoch_gradient_sum().signum()])
    }

    fn feasible_interval(&self) -> Option<FeasibleInterval> {
        Some(self.interval.clone())
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// i.i.d. `f_t(θ) = Cθ` with probability `(1+δ)/(C+1)`, else `−θ`; expected cost `δθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticCounterexample {
    pub c: f64,
    pub delta: f64,
    pub interval: FeasibleInterval,
}

impl StochasticCounterexample {
    pub fn new(c: f64, delta: f64) -> Result<Self, ProblemError> {
        if !(c.is_finite() && c >= 1.0 && delta > 0.0 && delta < c) {
            return Err(ProblemError::InvalidParameter(format!(
                "stochastic counterexample needs C >= 1 and 0 < delta < C, got C={c}, delta={delta}"
            )));
        }
        Ok(Self { c, delta, interval: FeasibleInterval::uniform(1, -1.0, 1.0)? })
    }

    pub fn prob_large(&self) -> f64 {
        (1.0 + self.delta) / (self.c + 1.0)
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        stochastic_gradient_sample(self.c, self.delta, rng)
    }

    /// `E[g] = δ`.
    pub fn mean(&self) -> f64 {
        self.delta
    }

    /// `E[g²] = C + δ(C−1)`.
    pub fn second_moment(&self) -> f64 {
        self.c + self.delta * (self.c - 1.0)
    }

    /// `E[g⁴] = C(C²−C+1) + δ(C−1)(C²+1)`.
    pub fn fourth_moment(&self) -> f64 {
        let (c, d) = (self.c, self.delta);
        c * (c * c - c + 1.0) + d * (c - 1.0) * (c * c + 1.0)
    }

    /// `D[g²] = C³−2C²+C + δ(C−1)³ − δ²(C−1)²`.
    pub fn squared_variance(&self) -> f64 {
        let (c, d) = (self.c, self.delta);
        c.powi(3) - 2.0 * c * c + c + d * (c - 1.0).powi(3) - d * d * (c - 1.0).powi(2)
    }
}

impl OnlineProblem for StochasticCounterexample {
    fn dim(&self) -> usize {
        1
    }

    fn draw(&self, _t: u64, rng: &mut StreamRng) -> Draw {
        Draw::Coefficients(vec![self.sample(rng)])
    }

    fn evaluate(&self, theta: &[f64], draw: &Draw) -> Evaluation {
        linear_eval(theta, draw)
    }

    fn objective(&self, theta: &[f64]) -> Option<f64> {
        Some(self.delta * theta[0])
    }

    fn optimum_direction(&self) -> Option<Vec<f64>> {
        Some(vec![-1.0])
    }

    fn feasible_interval(&self) -> Option<FeasibleInterval> {
        Some(self.interval.clone())
    }

    fn is_linear(&self) -> bool {
        true
    }
}
