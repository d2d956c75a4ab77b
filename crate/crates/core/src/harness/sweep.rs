use rayon::prelude::*;

use super::{run_online, ExperimentSpec, HarnessError};

/// Runs `f` on a dedicated pool of `threads` workers, or the global pool for `None`.
pub fn in_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, HarnessError> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| HarnessError::Config(format!("cannot build a {n}-thread pool: {e}"))),
    }
}

/// Grid over `(β1, β2)`; every other setting comes from `base`, run with its first seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub beta1_values: Vec<f64>,
    pub beta2_values: Vec<f64>,
    pub base: ExperimentSpec,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), HarnessError> {
        for (name, values) in [("beta1", &self.beta1_values), ("beta2", &self.beta2_values)] {
            if values.is_empty() {
                return Err(HarnessError::Config(format!("{name} grid is empty")));
            }
            if values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(HarnessError::Config(format!("{name} grid must be strictly increasing")));
            }
            if values.iter().any(|b| !(0.0..1.0).contains(b)) {
                return Err(HarnessError::Config(format!("{name} grid values must lie in [0, 1)")));
            }
        }
        self.base.validate()
    }

    pub fn cells(&self) -> usize {
        self.beta1_values.len() * self.beta2_values.len()
    }

    /// `(β1, β2)` of cell `index`, row-major with `β1` as the row.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let cols = self.beta2_values.len();
        (self.beta1_values[index / cols], self.beta2_values[index % cols])
    }

    pub fn cell_spec(&self, index: usize) -> ExperimentSpec {
        let (b1, b2) = self.cell(index);
        let mut spec = self.base.clone();
        spec.optimizer.beta1 = b1;
        spec.optimizer.beta2 = b2;
        spec
    }
}

/// Final first coordinate of θ per cell, row-major like [`SweepGrid::cell`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub beta1_values: Vec<f64>,
    pub beta2_values: Vec<f64>,
    pub final_theta: Vec<Option<f64>>,
    /// `(cell index, error message)` for cells whose run failed.
    pub failures: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.final_theta[row * self.beta2_values.len() + col]
    }
}

/// Runs every grid cell in parallel (bounded by `threads`) and merges in grid order.
pub fn run_sweep(grid: &SweepGrid, threads: Option<usize>) -> Result<SweepResult, HarnessError> {
    grid.validate()?;
    let seed = grid.base.seeds[0];
    let outcomes: Vec<Result<f64, String>> = in_pool(threads, || {
        (0..grid.cells())
            .into_par_iter()
            .map(|i| {
                run_online(&grid.cell_spec(i), seed)
                    .map(|r| r.final_theta[0])
                    .map_err(|e| e.to_string())
            })
            .collect()
    })?;
    let mut result = SweepResult {
        beta1_values: grid.beta1_values.clone(),
        beta2_values: grid.beta2_values.clone(),
        final_theta: Vec::with_capacity(outcomes.len()),
        failures: Vec::new(),
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(x) => result.final_theta.push(Some(x)),
            Err(e) => {
                result.final_theta.push(None);
                result.failures.push((i, e));
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ProblemSpec;
    use crate::optim::OptimizerConfig;

    fn grid(b1: Vec<f64>, b2: Vec<f64>) -> SweepGrid {
        let base = ExperimentSpec::new(
            ProblemSpec::Sequential { c: 6.0, d: 6 },
            OptimizerConfig::adam(0.01, 0.0, 0.9),
            300,
        );
        SweepGrid { beta1_values: b1, beta2_values: b2, base }
    }

    #[test]
    fn single_cell_equals_run_online() {
        let g = grid(vec![0.5], vec![0.9]);
        let sweep = run_sweep(&g, Some(1)).unwrap();
        let direct = run_online(&g.cell_spec(0), 1).unwrap();
        assert_eq!(sweep.final_theta, vec![Some(direct.final_theta[0])]);
    }

    #[test]
    fn parallel_equals_serial() {
        let g = grid(vec![0.0, 0.5, 0.9], vec![0.5, 0.9, 0.99]);
        let serial = run_sweep(&g, Some(1)).unwrap();
        let parallel = run_sweep(&g, Some(4)).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.get(1, 2), Some(run_online(&g.cell_spec(5), 1).unwrap().final_theta[0]));
    }

    #[test]
    fn grid_validation() {
        assert!(grid(vec![], vec![0.9]).validate().is_err());
        assert!(grid(vec![0.9, 0.5], vec![0.9]).validate().is_err());
        assert!(grid(vec![0.5], vec![1.0]).validate().is_err());
    }
}
