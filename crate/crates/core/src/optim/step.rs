use super::{Algorithm, BlockPartition, OptimError, OptimizerConfig, OptimizerState, SpatialOp};

/// Result of one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// 1-based step index this outcome belongs to.
    pub t: u64,
    pub alpha: f64,
    /// False during AdaShift warm-up, when the queue is still filling.
    pub updated: bool,
    /// `θ_after − θ_before`, computed after the update was applied.
    pub delta: Vec<f64>,
    /// First-moment estimate the step actually used (bias corrected where applicable).
    pub m: Vec<f64>,
    /// Second-moment estimate in the step's denominator, one entry per `v` slot
    /// (per coordinate, or per block for block-wise AdaShift). SGD and Momentum report 1.
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialValue {
    Scalar(f64),
    Elementwise(Vec<f64>),
}

/// `φ` applied to a block of squared gradients.
pub fn spatial_reduce(op: SpatialOp, squared_block: &[f64]) -> Result<SpatialValue, OptimError> {
    if squared_block.is_empty() {
        return Err(OptimError::EmptyBlock);
    }
    Ok(match op {
        SpatialOp::Max => SpatialValue::Scalar(squared_block.iter().copied().fold(0.0, f64::max)),
        SpatialOp::Mean => {
            SpatialValue::Scalar(squared_block.iter().sum::<f64>() / squared_block.len() as f64)
        }
        SpatialOp::Identity => SpatialValue::Elementwise(squared_block.to_vec()),
    })
}

/// Truncated exponential average of a gradient window ordered oldest to newest.
///
/// The newest gradient gets weight `β1^0 = 1`, the one before it `β1`, and so on; weights
/// are normalized to sum to one. `β1 = 1` is a plain average and `β1 = 0` keeps only the
/// newest gradient.
///
/// # Panics
/// If `window` is empty.
pub fn moving_average_m(window: &[Vec<f64>], beta1: f64) -> Vec<f64> {
    assert!(!window.is_empty(), "moving average over an empty window");
    let dim = window[0].len();
    let mut m = vec![0.0; dim];
    let mut weight = 1.0;
    let mut total = 0.0;
    for g in window.iter().rev() {
        for (mi, gi) in m.iter_mut().zip(g) {
            *mi += weight * gi;
        }
        total += weight;
        weight *= beta1;
    }
    for mi in &mut m {
        *mi /= total;
    }
    m
}

fn check_inputs(state: &OptimizerState, theta: &[f64], g: &[f64]) -> Result<(), OptimError> {
    let dim = state.dim();
    for got in [theta.len(), g.len()] {
        if got != dim {
            return Err(OptimError::DimensionMismatch { expected: dim, got });
        }
    }
    if let Some(index) = g.iter().position(|x| !x.is_finite()) {
        return Err(OptimError::NonFiniteGradient { step: state.t + 1, index });
    }
    Ok(())
}

/// `α · m / (√v + ε)`, with a zero numerator giving a zero step even when the denominator
/// vanishes.
#[inline]
fn scaled_step(alpha: f64, m: f64, v: f64, eps: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else {
        alpha * m / (v.sqrt() + eps)
    }
}

/// Applies `θ ← θ − step` if every resulting coordinate is finite; returns the realized delta.
fn apply(step_t: u64, theta: &mut [f64], step: &[f64]) -> Result<Vec<f64>, OptimError> {
    let next: Vec<f64> = theta.iter().zip(step).map(|(x, s)| x - s).collect();
    if let Some(index) = next.iter().position(|x| !x.is_finite()) {
        return Err(OptimError::NonFiniteParameter { step: step_t, index });
    }
    let delta = next.iter().zip(theta.iter()).map(|(a, b)| a - b).collect();
    theta.copy_from_slice(&next);
    Ok(delta)
}

/// `θ ← θ − α·g`.
pub fn sgd_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    g: &[f64],
    alpha: f64,
) -> Result<StepOutcome, OptimError> {
    check_inputs(state, theta, g)?;
    let t = state.t + 1;
    let step: Vec<f64> = g.iter().map(|gi| alpha * gi).collect();
    let delta = apply(t, theta, &step)?;
    state.t = t;
    Ok(StepOutcome { t, alpha, updated: true, delta, m: g.to_vec(), v: vec![1.0; g.len()] })
}

/// `m ← β1·m + (1−β1)·g`, `θ ← θ − α·m`.
pub fn momentum_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    g: &[f64],
    alpha: f64,
    beta1: f64,
) -> Result<StepOutcome, OptimError> {
    check_inputs(state, theta, g)?;
    let t = state.t + 1;
    let m: Vec<f64> = state.m.iter().zip(g).map(|(mi, gi)| beta1 * mi + (1.0 - beta1) * gi).collect();
    let step: Vec<f64> = m.iter().map(|mi| alpha * mi).collect();
    let delta = apply(t, theta, &step)?;
    state.t = t;
    state.m.copy_from_slice(&m);
    Ok(StepOutcome { t, alpha, updated: true, delta, m, v: vec![1.0; g.len()] })
}

struct AdamMoments {
    m: Vec<f64>,
    v: Vec<f64>,
    m_hat: Vec<f64>,
    v_hat: Vec<f64>,
}

fn adam_moments(state: &OptimizerState, g: &[f64], t: u64, config: &OptimizerConfig) -> AdamMoments {
    let (b1, b2) = (config.beta1, config.beta2);
    let m: Vec<f64> = state.m.iter().zip(g).map(|(mi, gi)| b1 * mi + (1.0 - b1) * gi).collect();
    let v: Vec<f64> = state.v.iter().zip(g).map(|(vi, gi)| b2 * vi + (1.0 - b2) * gi * gi).collect();
    let (mc, vc) = if config.bias_correction {
        (1.0 - b1.powi(t as i32), 1.0 - b2.powi(t as i32))
    } else {
        (1.0, 1.0)
    };
    let m_hat = m.iter().map(|x| x / mc).collect();
    let v_hat = v.iter().map(|x| x / vc).collect();
    AdamMoments { m, v, m_hat, v_hat }
}

/// Adam with optional bias correction; `ε` is added outside the square root.
pub fn adam_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    g: &[f64],
    alpha: f64,
    config: &OptimizerConfig,
) -> Result<StepOutcome, OptimError> {
    check_inputs(state, theta, g)?;
    let t = state.t + 1;
    let mo = adam_moments(state, g, t, config);
    let step: Vec<f64> = mo
        .m_hat
        .iter()
        .zip(&mo.v_hat)
        .map(|(m, v)| scaled_step(alpha, *m, *v, config.epsilon))
        .collect();
    let delta = apply(t, theta, &step)?;
    state.t = t;
    state.m = mo.m;
    state.v = mo.v;
    Ok(StepOutcome { t, alpha, updated: true, delta, m: mo.m_hat, v: mo.v_hat })
}

/// AMSGrad: Adam whose denominator uses the running element-wise maximum of the
/// (bias-corrected, when enabled) second-moment estimate, so it never decreases.
pub fn amsgrad_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    g: &[f64],
    alpha: f64,
    config: &OptimizerConfig,
) -> Result<StepOutcome, OptimError> {
    check_inputs(state, theta, g)?;
    let t = state.t + 1;
    let mo = adam_moments(state, g, t, config);
    let v_max: Vec<f64> = state.v_hat.iter().zip(&mo.v_hat).map(|(a, b)| a.max(*b)).collect();
    let step: Vec<f64> = mo
        .m_hat
        .iter()
        .zip(&v_max)
        .map(|(m, v)| scaled_step(alpha, *m, *v, config.epsilon))
        .collect();
    let delta = apply(t, theta, &step)?;
    state.t = t;
    state.m = mo.m;
    state.v = mo.v;
    state.v_hat.copy_from_slice(&v_max);
    Ok(StepOutcome { t, alpha, updated: true, delta, m: mo.m_hat, v: v_max })
}

/// AdaShift with a FIFO gradient queue of length `shift_n`.
///
/// While the queue fills (the first `shift_n` steps) gradients are only enqueued. Afterwards
/// each step dequeues `g_{t−n}`, enqueues `g_t`, averages the newest `m_window` queued
/// gradients into `m`, folds `φ(g²_{t−n})` into `v` per block (or per coordinate for
/// [`SpatialOp::Identity`]) and updates `θ` with `α·m/(√(v/(1−β2^k)) + ε)`.
pub fn adashift_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    g: &[f64],
    alpha: f64,
    config: &OptimizerConfig,
    partition: &BlockPartition,
) -> Result<StepOutcome, OptimError> {
    check_inputs(state, theta, g)?;
    let t = state.t + 1;
    let dim = g.len();
    if state.window.len() < config.shift_n {
        state.window.push_back(g.to_vec());
        state.t = t;
        return Ok(StepOutcome {
            t,
            alpha,
            updated: false,
            delta: vec![0.0; dim],
            m: vec![0.0; dim],
            v: state.v.clone(),
        });
    }

    let shifted = &state.window[0];
    let b2 = config.beta2;
    let mut v = state.v.clone();
    if config.spatial.is_blockwise() {
        for (slot, block) in partition.blocks().iter().enumerate() {
            let squared: Vec<f64> = shifted[block.range.clone()].iter().map(|x| x * x).collect();
            let SpatialValue::Scalar(s) = spatial_reduce(config.spatial, &squared)? else {
                unreachable!("block-wise op reduces to a scalar")
            };
            v[slot] = b2 * v[slot] + (1.0 - b2) * s;
        }
    } else {
        for (vi, x) in v.iter_mut().zip(shifted) {
            *vi = b2 * *vi + (1.0 - b2) * (x * x);
        }
    }
    let p = state.p * b2;
    let correction = if config.bias_correction { 1.0 - p } else { 1.0 };
    let v_eff: Vec<f64> = v.iter().map(|x| x / correction).collect();

    // The averaging window is the queue after dropping g_{t−n} and appending g_t.
    let keep = config.m_window;
    let mut recent: Vec<Vec<f64>> = state.window.iter().skip(state.window.len() + 1 - keep).cloned().collect();
    recent.push(g.to_vec());
    let m = moving_average_m(&recent, config.beta1);

    let mut step = vec![0.0; dim];
    if config.spatial.is_blockwise() {
        for (slot, block) in partition.blocks().iter().enumerate() {
            for i in block.range.clone() {
                step[i] = scaled_step(alpha, m[i], v_eff[slot], config.epsilon);
            }
        }
    } else {
        for i in 0..dim {
            step[i] = scaled_step(alpha, m[i], v_eff[i], config.epsilon);
        }
    }
    let delta = apply(t, theta, &step)?;

    state.window.pop_front();
    state.window.push_back(g.to_vec());
    state.v = v;
    state.p = p;
    state.t = t;
    Ok(StepOutcome { t, alpha, updated: true, delta, m, v: v_eff })
}

/// One step of whichever algorithm `config` selects, at `α_t` from its schedule.
pub fn run_step(
    state: &mut OptimizerState,
    theta: &mut [f64],
    g: &[f64],
    config: &OptimizerConfig,
    partition: &BlockPartition,
) -> Result<StepOutcome, OptimError> {
    let alpha = config.schedule.alpha(state.t + 1);
    match config.algorithm {
        Algorithm::Sgd => sgd_step(state, theta, g, alpha),
        Algorithm::Momentum => momentum_step(state, theta, g, alpha, config.beta1),
        Algorithm::Adam => adam_step(state, theta, g, alpha, config),
        Algorithm::AmsGrad => amsgrad_step(state, theta, g, alpha, config),
        Algorithm::AdaShift => adashift_step(state, theta, g, alpha, config, partition),
    }
}

/// Configuration, partition and state bundled together.
#[derive(Debug, Clone)]
pub struct Optimizer {
    config: OptimizerConfig,
    partition: BlockPartition,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, partition: BlockPartition) -> Result<Self, OptimError> {
        let state = OptimizerState::init(&config, partition.dim(), &partition)?;
        Ok(Self { config, partition, state })
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) -> Result<StepOutcome, OptimError> {
        run_step(&mut self.state, theta, g, &self.config, &self.partition)
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// For each coordinate, the index of its entry in [`StepOutcome::v`].
    pub fn v_slots(&self) -> Vec<usize> {
        let dim = self.partition.dim();
        if self.config.algorithm == Algorithm::AdaShift && self.config.spatial.is_blockwise() {
            (0..dim).map(|i| self.partition.block_of(i)).collect()
        } else {
            (0..dim).collect()
        }
    }
}
