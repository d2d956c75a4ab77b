use super::{run_online, ExperimentSpec, HarnessError, ProblemSpec};
use crate::analysis::{correlation_report, CorrelationReport, Record, Trajectory};
use crate::optim::OptimizerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DecorrelationResult {
    pub optimizer: OptimizerConfig,
    pub block: String,
    /// Steps the correlations were computed over (inclusive).
    pub window: (u64, u64),
    pub report: CorrelationReport,
}

/// Records of one parameter block over the last `tail_fraction` of the run.
fn block_tail(tr: &Trajectory, range: std::ops::Range<usize>, tail_fraction: f64) -> Trajectory {
    let skip = ((1.0 - tail_fraction) * tr.len() as f64).floor() as usize;
    let pick = |x: &[f64]| x[range.clone()].to_vec();
    let theta0 = if skip == 0 { pick(&tr.theta0) } else { pick(&tr.records[skip - 1].theta) };
    let mut out = Trajectory::new(theta0, tr.v_slots[range.clone()].to_vec(), tr.beta1, tr.shift_n);
    for r in &tr.records[skip..] {
        out.push(Record {
            t: r.t,
            theta: pick(&r.theta),
            g: pick(&r.g),
            m: pick(&r.m),
            v: r.v.clone(),
            delta: pick(&r.delta),
            loss: r.loss,
            alpha: r.alpha,
            updated: r.updated,
        });
    }
    out
}

/// Trains each optimizer on `problem` for `steps` steps from the same seed and reports
/// gradient / second-moment correlations of one block (the problem's first block when
/// `block` is `None`) over the last `tail_fraction` of training.
#[allow(clippy::too_many_arguments)]
pub fn decorrelation_experiment(
    problem: &ProblemSpec,
    optimizers: &[OptimizerConfig],
    steps: u64,
    tail_fraction: f64,
    block: Option<&str>,
    n_max: usize,
    pair_samples: usize,
    seed: u64,
) -> Result<Vec<DecorrelationResult>, HarnessError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(HarnessError::Config(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let partition = problem.build()?.partition();
    let chosen = match block {
        Some(label) => partition
            .blocks()
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| HarnessError::Config(format!("no parameter block named `{label}`")))?,
        None => &partition.blocks()[0],
    };
    optimizers
        .iter()
        .map(|opt| {
            let spec = ExperimentSpec::new(problem.clone(), opt.clone(), steps);
            let run = run_online(&spec, seed)?;
            let tail = block_tail(&run.trajectory, chosen.range.clone(), tail_fraction);
            let window = (tail.records[0].t, tail.last().map_or(0, |r| r.t));
            let report = correlation_report(&tail, n_max, pair_samples, seed)?;
            Ok(DecorrelationResult { optimizer: opt.clone(), block: chosen.label.clone(), window, report })
        })
        .collect()
}
