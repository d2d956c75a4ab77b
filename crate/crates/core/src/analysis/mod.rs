//! Theoretical quantities and their simulation oracles.
//!
//! Net update factors and `Γ_t` are read off recorded trajectories; limits, the epoch step
//! sum and the critical `C` of the periodic counterexample have closed forms checked against
//! limit-cycle simulation; expected net update factors on the stochastic counterexample
//! come with a second-order approximation and a Monte-Carlo estimate.

mod correlation;
mod expected;
mod factors;
mod limits;
mod regret;
mod report;
mod trajectory;

pub use correlation::{correlation_report, pearson, CorrelationReport};
pub use expected::{
    expected_k_second_order, expected_k_terms, monte_carlo_expected_k, theorem2_expected_k,
    ClassMean, McEstimate, VDistribution, VarianceModel,
};
pub use factors::{
    default_horizon, gamma_t, limit_cycle_factors, net_update_factor, rise_then_fall,
    EpochFactors, NetUpdateEstimate,
};
pub use limits::{
    critical_c, critical_c_tied, epoch_step_sum, m_limit_closed_form, simulate_limit_cycle,
    v_limit_closed_form, CriticalC, LimitCycle, StepSumMode,
};
pub use regret::{regret, RegretAccumulator, RegretSummary};
pub use report::{format_real, AnalysisReport, ReportRow};
pub use trajectory::{Record, Trajectory};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    InvalidParameter(String),
    #[error("trajectory has no record for step {0}")]
    MissingRecord(u64),
    #[error("horizon {horizon} from step {t0} runs past the last recorded step {last}")]
    HorizonExceedsTrajectory { t0: u64, horizon: usize, last: u64 },
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no root found: {0}")]
    NotFound(String),
}

pub(crate) fn check_unit_interval(name: &str, x: f64, allow_one: bool) -> Result<(), AnalysisError> {
    let ok = x >= 0.0 && if allow_one { x <= 1.0 } else { x < 1.0 };
    if ok {
        Ok(())
    } else {
        let hi = if allow_one { "]" } else { ")" };
        Err(AnalysisError::InvalidParameter(format!("{name}={x} outside [0, 1{hi}")))
    }
}
