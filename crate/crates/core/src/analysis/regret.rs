use super::{AnalysisError, Trajectory};
use crate::problems::{FeasibleInterval, OnlineProblem};

/// Running sums for the regret of an online run on linear costs `f_t(θ) = g_t·θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretAccumulator {
    steps: u64,
    loss_sum: f64,
    grad_sum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub total: f64,
    pub average: f64,
    /// Best fixed feasible parameter in hindsight.
    pub theta_star: Vec<f64>,
}

impl RegretAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { steps: 0, loss_sum: 0.0, grad_sum: vec![0.0; dim] }
    }

    /// Adds `f_t(θ_t)` and the gradient of `f_t`.
    pub fn push(&mut self, loss: f64, g: &[f64]) {
        self.steps += 1;
        self.loss_sum += loss;
        for (s, x) in self.grad_sum.iter_mut().zip(g) {
            *s += x;
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `R(T) = Σ f_t(θ_t) − min_{θ ∈ box} Σ f_t(θ)`. The minimizer of a linear function over
    /// a box sits at the lower endpoint where the summed gradient is positive and the upper
    /// one where it is negative.
    pub fn summary(&self, interval: &FeasibleInterval) -> RegretSummary {
        let theta_star: Vec<f64> = self
            .grad_sum
            .iter()
            .zip(interval.lo.iter().zip(&interval.hi))
            .map(|(s, (lo, hi))| if *s < 0.0 { *hi } else { *lo })
            .collect();
        let best: f64 = self.grad_sum.iter().zip(&theta_star).map(|(s, x)| s * x).sum();
        let total = self.loss_sum - best;
        let average = if self.steps == 0 { 0.0 } else { total / self.steps as f64 };
        RegretSummary { total, average, theta_star }
    }
}

/// Regret of a recorded run on a linear problem with a feasible box.
pub fn regret(trajectory: &Trajectory, problem: &dyn OnlineProblem) -> Result<RegretSummary, AnalysisError> {
    if !problem.is_linear() {
        return Err(AnalysisError::Unsupported("exact regret is implemented for linear costs".into()));
    }
    let interval = problem
        .feasible_interval()
        .ok_or_else(|| AnalysisError::Unsupported("regret needs a feasible interval".into()))?;
    if !trajectory.is_contiguous() {
        return Err(AnalysisError::Unsupported("regret needs every step recorded".into()));
    }
    let mut acc = RegretAccumulator::new(trajectory.dim());
    for r in &trajectory.records {
        acc.push(r.loss, &r.g);
    }
    Ok(acc.summary(&interval))
}
