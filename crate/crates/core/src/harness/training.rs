use rayon::prelude::*;

use super::{run_online, ExperimentSpec, HarnessError, RunResult};

/// Default divergence guard: a loss beyond `10^6 · max(1, initial loss)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// [`run_online`] with the divergence guard enabled (unless the spec sets its own).
pub fn run_training(spec: &ExperimentSpec, seed: u64) -> Result<RunResult, HarnessError> {
    let mut spec = spec.clone();
    spec.divergence_factor.get_or_insert(DIVERGENCE_FACTOR);
    run_online(&spec, seed)
}

/// Objective at the final parameters when available, else the last recorded step loss.
pub fn final_loss(result: &RunResult) -> f64 {
    match result.objective_curve.last() {
        Some(&(_, obj)) => obj,
        None => result.trajectory.last().map_or(f64::NAN, |r| r.loss),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub best_alpha: f64,
    pub best_loss: f64,
    pub best: RunResult,
    /// `(α, final loss)` per grid value; `None` when the run failed or diverged.
    pub trials: Vec<(f64, Option<f64>)>,
}

/// Trains once per initial learning rate in `grid` (keeping the schedule's shape) and
/// keeps the lowest final loss; ties go to the earlier grid entry.
pub fn tune_learning_rate(spec: &ExperimentSpec, grid: &[f64], seed: u64) -> Result<TuningResult, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Config("learning-rate grid is empty".into()));
    }
    let runs: Vec<Result<RunResult, HarnessError>> = grid
        .par_iter()
        .map(|&alpha| {
            let mut s = spec.clone();
            s.optimizer.schedule = s.optimizer.schedule.with_initial(alpha);
            run_training(&s, seed)
        })
        .collect();
    let mut trials = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64, RunResult)> = None;
    let mut last_error = None;
    for (&alpha, run) in grid.iter().zip(runs) {
        match run {
            Ok(r) => {
                let loss = final_loss(&r);
                let loss = if loss.is_finite() { Some(loss) } else { None };
                trials.push((alpha, loss));
                if let Some(l) = loss {
                    if best.as_ref().is_none_or(|b| l < b.1) {
                        best = Some((alpha, l, r));
                    }
                }
            }
            Err(e) => {
                trials.push((alpha, None));
                last_error = Some(e);
            }
        }
    }
    match best {
        Some((best_alpha, best_loss, best)) => Ok(TuningResult { best_alpha, best_loss, best, trials }),
        None => Err(last_error.unwrap_or_else(|| HarnessError::Config("every learning rate failed".into()))),
    }
}
