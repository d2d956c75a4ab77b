use std::fmt;
use std::str::FromStr;

use super::OptimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sgd,
    Momentum,
    Adam,
    AmsGrad,
    AdaShift,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Sgd, Algorithm::Momentum, Algorithm::Adam, Algorithm::AmsGrad, Algorithm::AdaShift];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Momentum => "momentum",
            Algorithm::Adam => "adam",
            Algorithm::AmsGrad => "amsgrad",
            Algorithm::AdaShift => "adashift",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Algorithm::Sgd),
            "momentum" => Ok(Algorithm::Momentum),
            "adam" => Ok(Algorithm::Adam),
            "amsgrad" => Ok(Algorithm::AmsGrad),
            "adashift" => Ok(Algorithm::AdaShift),
            _ => Err(OptimError::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Reduction applied to a block of squared, shifted gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpatialOp {
    /// One shared scale per block: the largest squared gradient.
    Max,
    /// One shared scale per block: the mean squared gradient.
    Mean,
    /// Element-wise scales; AdaShift then only shifts in time.
    Identity,
}

impl SpatialOp {
    pub fn name(self) -> &'static str {
        match self {
            SpatialOp::Max => "max",
            SpatialOp::Mean => "mean",
            SpatialOp::Identity => "identity",
        }
    }

    /// Whether `v` holds one scalar per block rather than one value per coordinate.
    pub fn is_blockwise(self) -> bool {
        !matches!(self, SpatialOp::Identity)
    }
}

impl fmt::Display for SpatialOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpatialOp {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(SpatialOp::Max),
            "mean" => Ok(SpatialOp::Mean),
            "identity" | "none" => Ok(SpatialOp::Identity),
            _ => Err(OptimError::Config(format!("unknown spatial operation `{s}`"))),
        }
    }
}

/// Base learning rate `α_t` as a function of the 1-based step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant(f64),
    /// `α0 · max(0, 1 − (t−1)/horizon)`.
    LinearDecay { alpha0: f64, horizon: u64 },
    /// `α0 · exp(−rate · (t−1))`.
    ExpDecay { alpha0: f64, rate: f64 },
}

impl LrSchedule {
    pub fn alpha(&self, t: u64) -> f64 {
        let elapsed = t.saturating_sub(1) as f64;
        match *self {
            LrSchedule::Constant(a) => a,
            LrSchedule::LinearDecay { alpha0, horizon } => {
                alpha0 * (1.0 - elapsed / horizon as f64).max(0.0)
            }
            LrSchedule::ExpDecay { alpha0, rate } => alpha0 * (-rate * elapsed).exp(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.alpha(1)
    }

    /// Same schedule shape with a different starting rate.
    pub fn with_initial(&self, alpha0: f64) -> Self {
        match *self {
            LrSchedule::Constant(_) => LrSchedule::Constant(alpha0),
            LrSchedule::LinearDecay { horizon, .. } => LrSchedule::LinearDecay { alpha0, horizon },
            LrSchedule::ExpDecay { rate, .. } => LrSchedule::ExpDecay { alpha0, rate },
        }
    }

    fn validate(&self) -> Result<(), OptimError> {
        let (a, ok) = match *self {
            LrSchedule::Constant(a) => (a, true),
            LrSchedule::LinearDecay { alpha0, horizon } => (alpha0, horizon > 0),
            LrSchedule::ExpDecay { alpha0, rate } => (alpha0, rate.is_finite() && rate >= 0.0),
        };
        if !(a.is_finite() && a > 0.0) || !ok {
            return Err(OptimError::Config(format!("invalid learning-rate schedule {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub schedule: LrSchedule,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// AdaShift: how many steps `v` lags behind the current gradient.
    pub shift_n: usize,
    /// AdaShift: number of newest gradients averaged into `m` (at most `shift_n`).
    pub m_window: usize,
    pub spatial: SpatialOp,
    pub bias_correction: bool,
}

pub const DEFAULT_EPSILON: f64 = 1e-8;

impl OptimizerConfig {
    fn base(algorithm: Algorithm, alpha: f64) -> Self {
        Self {
            algorithm,
            schedule: LrSchedule::Constant(alpha),
            beta1: 0.0,
            beta2: 0.999,
            epsilon: DEFAULT_EPSILON,
            shift_n: 1,
            m_window: 1,
            spatial: SpatialOp::Identity,
            bias_correction: true,
        }
    }

    pub fn sgd(alpha: f64) -> Self {
        Self::base(Algorithm::Sgd, alpha)
    }

    pub fn momentum(alpha: f64, beta1: f64) -> Self {
        Self { beta1, ..Self::base(Algorithm::Momentum, alpha) }
    }

    pub fn adam(alpha: f64, beta1: f64, beta2: f64) -> Self {
        Self { beta1, beta2, ..Self::base(Algorithm::Adam, alpha) }
    }

    pub fn amsgrad(alpha: f64, beta1: f64, beta2: f64) -> Self {
        Self { beta1, beta2, ..Self::base(Algorithm::AmsGrad, alpha) }
    }

    /// AdaShift with `m_window = n`.
    pub fn adashift(alpha: f64, beta1: f64, beta2: f64, n: usize, spatial: SpatialOp) -> Self {
        Self { beta1, beta2, shift_n: n, m_window: n, spatial, ..Self::base(Algorithm::AdaShift, alpha) }
    }

    pub fn with_schedule(mut self, schedule: LrSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_m_window(mut self, m_window: usize) -> Self {
        self.m_window = m_window;
        self
    }

    pub fn with_bias_correction(mut self, on: bool) -> Self {
        self.bias_correction = on;
        self
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        self.schedule.validate()?;
        let err = |msg: String| Err(OptimError::Config(msg));
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return err(format!("epsilon must be finite and non-negative, got {}", self.epsilon));
        }
        let b1 = self.beta1;
        match self.algorithm {
            Algorithm::Sgd => {}
            Algorithm::Momentum | Algorithm::Adam | Algorithm::AmsGrad => {
                if !(0.0..1.0).contains(&b1) {
                    return err(format!("beta1 must lie in [0, 1) for {}, got {b1}", self.algorithm));
                }
            }
            Algorithm::AdaShift => {
                if !(0.0..=1.0).contains(&b1) {
                    return err(format!("beta1 must lie in [0, 1] for adashift, got {b1}"));
                }
                if self.shift_n < 1 {
                    return err("adashift requires shift_n >= 1".into());
                }
                if self.m_window < 1 || self.m_window > self.shift_n {
                    return err(format!(
                        "m_window must lie in [1, shift_n={}], got {}",
                        self.shift_n, self.m_window
                    ));
                }
            }
        }
        if matches!(self.algorithm, Algorithm::Adam | Algorithm::AmsGrad | Algorithm::AdaShift)
            && !(0.0..1.0).contains(&self.beta2)
        {
            return err(format!("beta2 must lie in [0, 1), got {}", self.beta2));
        }
        Ok(())
    }
}
