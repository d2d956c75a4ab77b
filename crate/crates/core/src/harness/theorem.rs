use rayon::prelude::*;

use super::{run_online, ExperimentSpec, HarnessError, ProblemSpec};
use crate::optim::OptimizerConfig;

/// Direction outcome of Adam at one `β1` across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaOutcome {
    pub beta1: f64,
    /// Seeds whose displacement sign matches the problem's optimum direction.
    pub correct: usize,
    pub runs: usize,
    pub mean_displacement: f64,
    pub displacements: Vec<f64>,
}

impl BetaOutcome {
    /// Strict majority of seeds moved the right way.
    pub fn passes(&self) -> bool {
        2 * self.correct > self.runs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Result {
    /// Smallest grid `β1` whose majority of seeds moved in the correct direction.
    pub smallest_passing: f64,
    pub outcomes: Vec<BetaOutcome>,
}

/// Runs Adam at each `β1` of an ascending grid on a scalar problem and reports which move
/// `θ` in the problem's optimum direction (majority over `seeds`).
pub fn theorem1_check(
    problem: &ProblemSpec,
    alpha: f64,
    beta2: f64,
    beta1_grid: &[f64],
    steps: u64,
    seeds: &[u64],
) -> Result<Theorem1Result, HarnessError> {
    if beta1_grid.is_empty() || beta1_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(HarnessError::Config("beta1 grid must be non-empty and ascending".into()));
    }
    let direction = problem
        .build()?
        .optimum_direction()
        .ok_or_else(|| HarnessError::Config("problem has no known optimum direction".into()))?;
    let cells: Vec<(f64, u64)> =
        beta1_grid.iter().flat_map(|&b| seeds.iter().map(move |&s| (b, s))).collect();
    let finals: Vec<Result<f64, HarnessError>> = cells
        .par_iter()
        .map(|&(b1, seed)| {
            let spec = ExperimentSpec::new(problem.clone(), OptimizerConfig::adam(alpha, b1, beta2), steps)
                .with_record_every(steps);
            run_online(&spec, seed).map(|r| r.displacement()[0])
        })
        .collect();
    let mut outcomes = Vec::with_capacity(beta1_grid.len());
    let mut finals = finals.into_iter();
    for &beta1 in beta1_grid {
        let displacements = finals.by_ref().take(seeds.len()).collect::<Result<Vec<f64>, _>>()?;
        let correct = displacements.iter().filter(|x| x.signum() == direction[0]).count();
        let mean_displacement = displacements.iter().sum::<f64>() / displacements.len() as f64;
        outcomes.push(BetaOutcome { beta1, correct, runs: seeds.len(), mean_displacement, displacements });
    }
    match outcomes.iter().find(|o| o.passes()) {
        Some(o) => Ok(Theorem1Result { smallest_passing: o.beta1, outcomes }),
        None => Err(HarnessError::Theorem1NotFound { outcomes }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_convergent_problem_passes_at_first_grid_point() {
        // Epoch sum is negative, so increasing θ is correct and plain Adam does it.
        let problem = ProblemSpec::Sequential { c: 2.0, d: 6 };
        let r = theorem1_check(&problem, 0.01, 0.99, &[0.0], 600, &[1, 2, 3]).unwrap();
        assert_eq!(r.smallest_passing, 0.0);
        assert_eq!(r.outcomes[0].correct, 3);
    }

    #[test]
    fn none_passing_is_typed() {
        // Critical C at β1 = 0, β2 = 0.99, d = 50 is about 55.7, so C = 50 goes the wrong way.
        let problem = ProblemSpec::Sequential { c: 50.0, d: 50 };
        let r = theorem1_check(&problem, 0.01, 0.99, &[0.0], 2000, &[1]);
        assert!(matches!(r, Err(HarnessError::Theorem1NotFound { .. })));
    }
}
