use std::path::PathBuf;
use std::time::{Duration, Instant};

use super::HarnessError;
use crate::analysis::{Record, RegretAccumulator, RegretSummary, Trajectory};
use crate::optim::{Algorithm, Optimizer, OptimizerConfig};
use crate::problems::{
    make_synthetic_dataset, project_feasible, IllConditionedNet, LogisticTask, OnlineProblem,
    SequentialCounterexample, StochasticCounterexample,
};
use crate::rng::seeded;

/// Which cost-function stream an experiment runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Sequential { c: f64, d: u64 },
    Stochastic { c: f64, delta: f64 },
    Logistic { dim: usize, samples: usize, separation: f64, data_seed: u64, batch_size: usize, l2: f64 },
    LogisticFile { path: PathBuf, batch_size: usize, l2: f64 },
    IllConditioned { dim: usize, kappa: f64, init_sigma: f64, init_seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn OnlineProblem>, HarnessError> {
        Ok(match self {
            ProblemSpec::Sequential { c, d } => Box::new(SequentialCounterexample::new(*c, *d)?),
            ProblemSpec::Stochastic { c, delta } => Box::new(StochasticCounterexample::new(*c, *delta)?),
            ProblemSpec::Logistic { dim, samples, separation, data_seed, batch_size, l2 } => Box::new(
                make_synthetic_dataset(*dim, *samples, *separation, *data_seed)?
                    .with_batch_size(*batch_size)
                    .with_l2(*l2),
            ),
            ProblemSpec::LogisticFile { path, batch_size, l2 } => {
                Box::new(LogisticTask::read_csv(path, *batch_size, *l2)?)
            }
            ProblemSpec::IllConditioned { dim, kappa, .. } => Box::new(IllConditionedNet::new(*dim, *kappa)?),
        })
    }

    /// Starting parameters: zeros, except identity plus seeded noise for the linear net.
    pub fn default_theta0(&self, dim: usize) -> Result<Vec<f64>, HarnessError> {
        Ok(match self {
            ProblemSpec::IllConditioned { dim: n, kappa, init_sigma, init_seed } => {
                IllConditionedNet::new(*n, *kappa)?.initial_theta(*init_sigma, *init_seed)
            }
            _ => vec![0.0; dim],
        })
    }
}

/// One experiment: a problem, an optimizer, a step budget and the seeds to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerConfig,
    pub steps: u64,
    pub seeds: Vec<u64>,
    /// Keep every `record_every`-th step (the last step is always kept).
    pub record_every: u64,
    /// Clamp θ to the problem's feasible box after each step.
    pub projection: bool,
    /// Overrides [`ProblemSpec::default_theta0`].
    pub theta0: Option<Vec<f64>>,
    /// Abort when a step's loss is non-finite or exceeds this many times
    /// `max(1, initial loss)`.
    pub divergence_factor: Option<f64>,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemSpec, optimizer: OptimizerConfig, steps: u64) -> Self {
        Self {
            problem,
            optimizer,
            steps,
            seeds: vec![1],
            record_every: 1,
            projection: false,
            theta0: None,
            divergence_factor: None,
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_record_every(mut self, every: u64) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_projection(mut self, on: bool) -> Self {
        self.projection = on;
        self
    }

    pub fn with_theta0(mut self, theta0: Vec<f64>) -> Self {
        self.theta0 = Some(theta0);
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.optimizer.validate()?;
        if self.steps == 0 {
            return Err(HarnessError::Config("steps must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        if self.record_every == 0 || self.record_every > self.steps {
            return Err(HarnessError::Config(format!(
                "record_every={} must lie in [1, steps={}]",
                self.record_every, self.steps
            )));
        }
        Ok(())
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub final_theta: Vec<f64>,
    pub trajectory: Trajectory,
    /// Present for linear problems with a feasible box.
    pub regret: Option<RegretSummary>,
    /// `(t, objective at θ_t)` at recorded steps, for problems with a closed-form objective.
    pub objective_curve: Vec<(u64, f64)>,
    pub steps_completed: u64,
    pub wall_time: Duration,
}

impl RunResult {
    /// `θ_T − θ_0`.
    pub fn displacement(&self) -> Vec<f64> {
        self.final_theta.iter().zip(&self.trajectory.theta0).map(|(a, b)| a - b).collect()
    }
}

/// Runs `spec.steps` optimizer steps against the problem stream seeded by `seed`.
///
/// On a failed step the error carries the partial result up to the previous step.
pub fn run_online(spec: &ExperimentSpec, seed: u64) -> Result<RunResult, HarnessError> {
    spec.validate()?;
    let problem = spec.problem.build()?;
    let dim = problem.dim();
    let mut theta = match &spec.theta0 {
        Some(t) if t.len() == dim => t.clone(),
        Some(t) => {
            return Err(HarnessError::Config(format!("theta0 has {} entries, problem has {dim}", t.len())))
        }
        None => spec.problem.default_theta0(dim)?,
    };
    let interval = problem.feasible_interval();
    if spec.projection && interval.is_none() {
        return Err(HarnessError::Config("projection requested but the problem has no feasible box".into()));
    }
    let mut optimizer = Optimizer::new(spec.optimizer.clone(), problem.partition())?;
    let shift_n = (spec.optimizer.algorithm == Algorithm::AdaShift).then_some(spec.optimizer.shift_n);
    let mut result = RunResult {
        seed,
        final_theta: theta.clone(),
        trajectory: Trajectory::new(theta.clone(), optimizer.v_slots(), spec.optimizer.beta1, shift_n),
        regret: None,
        objective_curve: Vec::new(),
        steps_completed: 0,
        wall_time: Duration::ZERO,
    };
    let mut regret = (problem.is_linear() && interval.is_some()).then(|| RegretAccumulator::new(dim));
    let mut rng = seeded(seed);
    let started = Instant::now();
    let mut limit = f64::INFINITY;

    for t in 1..=spec.steps {
        let draw = problem.draw(t, &mut rng);
        let eval = problem.evaluate(&theta, &draw);
        if let Some(factor) = spec.divergence_factor {
            if t == 1 {
                limit = factor * eval.loss.abs().max(1.0);
            }
            if !eval.loss.is_finite() || eval.loss > limit {
                result.wall_time = started.elapsed();
                return Err(HarnessError::Diverged { step: t, loss: eval.loss, limit, partial: Box::new(result) });
            }
        }
        let before = theta.clone();
        let outcome = match optimizer.step(&mut theta, &eval.gradient) {
            Ok(o) => o,
            Err(source) => {
                result.wall_time = started.elapsed();
                return Err(HarnessError::StepFailed { step: t, source, partial: Box::new(result) });
            }
        };
        if spec.projection {
            if let Some(interval) = &interval {
                project_feasible(&mut theta, interval);
            }
        }
        if let Some(acc) = regret.as_mut() {
            acc.push(eval.loss, &eval.gradient);
        }
        result.steps_completed = t;
        if t % spec.record_every == 0 || t == spec.steps {
            let delta = theta.iter().zip(&before).map(|(a, b)| a - b).collect();
            result.trajectory.push(Record {
                t,
                theta: theta.clone(),
                g: eval.gradient,
                m: outcome.m,
                v: outcome.v,
                delta,
                loss: eval.loss,
                alpha: outcome.alpha,
                updated: outcome.updated,
            });
            if let Some(obj) = problem.objective(&theta) {
                result.objective_curve.push((t, obj));
            }
        }
        result.final_theta.clone_from(&theta);
    }
    result.regret = match (regret, &interval) {
        (Some(acc), Some(interval)) => Some(acc.summary(interval)),
        _ => None,
    };
    result.wall_time = started.elapsed();
    Ok(result)
}

/// [`run_online`] for every seed of the spec, in parallel, returned in seed order.
pub fn run_seeds(spec: &ExperimentSpec) -> Vec<Result<RunResult, HarnessError>> {
    use rayon::prelude::*;
    spec.seeds.par_iter().map(|&seed| run_online(spec, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::SpatialOp;

    fn stochastic(opt: OptimizerConfig, steps: u64) -> ExperimentSpec {
        ExperimentSpec::new(ProblemSpec::Stochastic { c: 101.0, delta: 0.02 }, opt, steps)
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = stochastic(OptimizerConfig::adam(0.001, 0.0, 0.999), 500);
        let a = run_online(&spec, 3).unwrap();
        let b = run_online(&spec, 3).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_ne!(run_online(&spec, 4).unwrap().final_theta, a.final_theta);
    }

    #[test]
    fn thinning_keeps_last_step() {
        let spec = stochastic(OptimizerConfig::sgd(0.001), 25).with_record_every(10);
        let r = run_online(&spec, 1).unwrap();
        let ts: Vec<u64> = r.trajectory.records.iter().map(|x| x.t).collect();
        assert_eq!(ts, vec![10, 20, 25]);
        assert_eq!(r.final_theta, r.trajectory.last().unwrap().theta);
    }

    #[test]
    fn projection_keeps_theta_in_box() {
        let spec = stochastic(OptimizerConfig::sgd(0.5), 200).with_projection(true);
        let r = run_online(&spec, 2).unwrap();
        assert!(r.trajectory.records.iter().all(|x| x.theta[0].abs() <= 1.0));
        assert!(r.regret.is_some());
    }

    #[test]
    fn delta_matches_consecutive_thetas() {
        let opt = OptimizerConfig::adashift(0.01, 0.9, 0.999, 3, SpatialOp::Max);
        let spec = ExperimentSpec::new(ProblemSpec::Sequential { c: 6.0, d: 6 }, opt, 40);
        let r = run_online(&spec, 1).unwrap();
        let mut prev = r.trajectory.theta0.clone();
        for rec in &r.trajectory.records {
            assert_eq!(rec.delta[0], rec.theta[0] - prev[0]);
            prev.clone_from(&rec.theta);
        }
        assert!(!r.trajectory.records[2].updated && r.trajectory.records[3].updated);
    }

    #[test]
    fn rejects_bad_specs() {
        let spec = stochastic(OptimizerConfig::sgd(0.1), 10).with_seeds(vec![]);
        assert!(matches!(run_online(&spec, 1), Err(HarnessError::Config(_))));
        let spec = stochastic(OptimizerConfig::sgd(0.1), 10).with_theta0(vec![0.0, 0.0]);
        assert!(run_online(&spec, 1).is_err());
    }
}
