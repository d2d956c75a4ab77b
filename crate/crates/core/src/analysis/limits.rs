use super::{check_unit_interval, AnalysisError};
use crate::problems::sequential_gradient;

fn check_index(d: u64, i: u64) -> Result<(), AnalysisError> {
    if d == 0 || i == 0 || i > d {
        return Err(AnalysisError::InvalidParameter(format!("need 1 <= i <= d, got i={i}, d={d}")));
    }
    Ok(())
}

/// Limit of Adam's `v` at the `i`-th step of an epoch of the periodic counterexample:
/// `(1−β2)/(1−β2^d)·(C²−1)·β2^{i−1} + 1`.
pub fn v_limit_closed_form(beta2: f64, c: f64, d: u64, i: u64) -> Result<f64, AnalysisError> {
    check_unit_interval("beta2", beta2, false)?;
    check_index(d, i)?;
    Ok((1.0 - beta2) / (1.0 - beta2.powi(d as i32)) * (c * c - 1.0) * beta2.powi(i as i32 - 1) + 1.0)
}

/// Limit of Adam's `m` at the `i`-th step of an epoch:
/// `(1−β1)/(1−β1^d)·(C+1)·β1^{i−1} − 1`.
pub fn m_limit_closed_form(beta1: f64, c: f64, d: u64, i: u64) -> Result<f64, AnalysisError> {
    check_unit_interval("beta1", beta1, false)?;
    check_index(d, i)?;
    Ok((1.0 - beta1) / (1.0 - beta1.powi(d as i32)) * (c + 1.0) * beta1.powi(i as i32 - 1) - 1.0)
}

/// Uncorrected `m` and `v` over one epoch of the periodic counterexample, after running
/// the Adam recursions from zero for `epochs` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    /// `m[i−1]` is the value after the epoch's `i`-th step.
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl LimitCycle {
    /// `Σ_i m_i/√v_i` over the epoch.
    pub fn step_sum(&self) -> f64 {
        self.m.iter().zip(&self.v).map(|(m, v)| m / v.sqrt()).sum()
    }
}

pub fn simulate_limit_cycle(
    beta1: f64,
    beta2: f64,
    c: f64,
    d: u64,
    epochs: u64,
) -> Result<LimitCycle, AnalysisError> {
    check_unit_interval("beta1", beta1, false)?;
    check_unit_interval("beta2", beta2, false)?;
    if d == 0 || epochs == 0 {
        return Err(AnalysisError::InvalidParameter("need d >= 1 and epochs >= 1".into()));
    }
    let (mut m, mut v) = (0.0, 0.0);
    let mut cycle = LimitCycle { m: Vec::with_capacity(d as usize), v: Vec::with_capacity(d as usize) };
    let total = epochs * d;
    for t in 1..=total {
        let g = sequential_gradient(c, d, t);
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        if t > total - d {
            cycle.m.push(m);
            cycle.v.push(v);
        }
    }
    Ok(cycle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSumMode {
    /// Drops the `+1` in the `v` limit, assuming `v ≫ 1`.
    Approximate,
    /// Uses the full `v` limit.
    Exact,
}

/// Sum over one limit-cycle epoch of `m_i/√v_i`, the per-epoch parameter decrease at
/// `α = 1`. Positive values move `θ` towards the minimizer of the periodic problem when its
/// epoch gradient sum is negative.
///
/// At fixed `d` and `β`s this is strictly increasing in `C` on `(1, ∞)`.
pub fn epoch_step_sum(
    beta1: f64,
    beta2: f64,
    c: f64,
    d: u64,
    mode: StepSumMode,
) -> Result<f64, AnalysisError> {
    if !(c > 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "epoch step sum needs C > 1, got {c}"
        )));
    }
    let mut s = 0.0;
    for i in 1..=d.max(1) {
        let m = m_limit_closed_form(beta1, c, d, i)?;
        let v = match mode {
            StepSumMode::Exact => v_limit_closed_form(beta2, c, d, i)?,
            StepSumMode::Approximate => v_limit_closed_form(beta2, c, d, i)? - 1.0,
        };
        s += m / v.sqrt();
    }
    Ok(s)
}

/// Root in `C` of the approximate epoch step sum at epoch length `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalC {
    pub value: f64,
    /// False when `value ≤ 1`, where the `v ≫ 1` approximation has no valid root.
    pub valid: bool,
}

fn critical_c_real(beta1: f64, beta2: f64, d: f64) -> f64 {
    let r = beta2.sqrt();
    (1.0 - beta1.powf(d)) * (1.0 - r.powf(d)) * (r - beta1)
        / ((1.0 - beta1) * (1.0 - r) * (r.powf(d) - beta1.powf(d)))
        - 1.0
}

/// Critical `C` separating correct from wrong-direction convergence of Adam on the
/// periodic counterexample with epoch length `d`:
///
/// `C = (1−β1^d)(1−√β2^d)(√β2−β1) / [(1−β1)(1−√β2)(√β2^d−β1^d)] − 1`.
///
/// Larger `C` gives a positive epoch step sum (correct direction).
pub fn critical_c(beta1: f64, beta2: f64, d: u64) -> Result<CriticalC, AnalysisError> {
    check_unit_interval("beta1", beta1, false)?;
    check_unit_interval("beta2", beta2, false)?;
    if d == 0 {
        return Err(AnalysisError::InvalidParameter("d must be >= 1".into()));
    }
    if beta2 == 0.0 {
        return Err(AnalysisError::Singular("beta2 = 0 makes √β2 − 1 vanish".into()));
    }
    if (beta2.sqrt() - beta1).abs() <= 1e-12 {
        return Err(AnalysisError::Singular(format!("beta1 = sqrt(beta2) = {beta1}")));
    }
    let value = if d == 1 { 0.0 } else { critical_c_real(beta1, beta2, d as f64) };
    Ok(CriticalC { value, valid: value > 1.0 })
}

/// Epoch length `d` (real-valued) at which the critical `C` equals `d` itself, i.e. the
/// threshold when the epoch length is tied to `C`.
pub fn critical_c_tied(beta1: f64, beta2: f64) -> Result<f64, AnalysisError> {
    critical_c(beta1, beta2, 2)?;
    let f = |d: f64| critical_c_real(beta1, beta2, d) - d;
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        if hi > 1e7 {
            return Err(AnalysisError::NotFound(format!(
                "critical C stays below d up to d = 1e7 for beta1={beta1}, beta2={beta2}"
            )));
        }
        hi += 1.0;
    }
    let mut lo = hi - 1.0;
    if lo < 1.0 + 1e-9 {
        lo = 1.0 + 1e-9;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
