use super::{run_online, ExperimentSpec, HarnessError, ProblemSpec};
use crate::optim::OptimizerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochLength {
    Fixed(u64),
    /// `d = C`; only integer `C` are tried.
    TiedToC,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalMode {
    Sequential(EpochLength),
    /// i.i.d. gradients with mean `delta`; all `C` share the seed's uniform draws.
    Stochastic { delta: f64 },
}

/// Threshold in `C` where the sign of Adam's total displacement flips.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCritical {
    pub estimate: f64,
    /// Final bracket: the displacement at `lo` has the sign it has at the search's lower
    /// end, the one at `hi` the opposite sign.
    pub lo: f64,
    pub hi: f64,
    /// Every `(C, θ_T − θ_0)` evaluated, in evaluation order.
    pub samples: Vec<(f64, f64)>,
}

fn displacement(
    beta1: f64,
    beta2: f64,
    mode: CriticalMode,
    c: f64,
    steps: u64,
    seed: u64,
) -> Result<f64, HarnessError> {
    let problem = match mode {
        CriticalMode::Sequential(EpochLength::Fixed(d)) => ProblemSpec::Sequential { c, d },
        CriticalMode::Sequential(EpochLength::TiedToC) => ProblemSpec::Sequential { c, d: c as u64 },
        CriticalMode::Stochastic { delta } => ProblemSpec::Stochastic { c, delta },
    };
    // With ε = 0 and bias correction the trajectory is exactly proportional to α.
    let optimizer = OptimizerConfig::adam(1e-3, beta1, beta2).with_epsilon(0.0);
    let spec = ExperimentSpec::new(problem, optimizer, steps)
        .with_record_every(steps)
        .with_theta0(vec![0.0]);
    Ok(run_online(&spec, seed)?.final_theta[0])
}

/// Bisects `C` over `bracket` for the sign flip of Adam's displacement after `steps`
/// updates from `θ = 0`.
///
/// With a fixed epoch length `d`, small `C` (just above `d − 1`) leaves Adam moving the
/// wrong way and large `C` the right way; with `d` tied to `C`, or on the stochastic
/// problem, the orientation is reversed. The search only needs the two ends to disagree.
pub fn empirical_critical_c(
    beta1: f64,
    beta2: f64,
    mode: CriticalMode,
    steps: u64,
    seed: u64,
    bracket: (f64, f64),
) -> Result<EmpiricalCritical, HarnessError> {
    let (mut lo, mut hi) = bracket;
    let tied = matches!(mode, CriticalMode::Sequential(EpochLength::TiedToC));
    if tied {
        lo = lo.ceil().max(1.0);
        hi = hi.floor();
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(HarnessError::Config(format!("bad bracket [{}, {}]", bracket.0, bracket.1)));
    }
    let mut samples = Vec::new();
    let mut eval = |c: f64| -> Result<bool, HarnessError> {
        let x = displacement(beta1, beta2, mode, c, steps, seed)?;
        samples.push((c, x));
        Ok(x > 0.0)
    };
    let lo_sign = eval(lo)?;
    if lo == hi || eval(hi)? == lo_sign {
        return Err(HarnessError::CriticalNotFound { lo, hi, samples });
    }
    if tied {
        while hi - lo > 1.0 {
            let mid = ((lo + hi) / 2.0).floor();
            if eval(mid)? == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(EmpiricalCritical { estimate: hi, lo, hi, samples });
    }
    for _ in 0..100 {
        if hi - lo <= 1e-6 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid)? == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EmpiricalCritical { estimate: 0.5 * (lo + hi), lo, hi, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_bracket_is_not_found() {
        let r = empirical_critical_c(0.9, 0.99, CriticalMode::Sequential(EpochLength::Fixed(20)), 200, 1, (25.0, 25.0));
        assert!(matches!(r, Err(HarnessError::CriticalNotFound { .. })));
    }

    #[test]
    fn tied_mode_returns_an_integer() {
        let r = empirical_critical_c(0.9, 0.99, CriticalMode::Sequential(EpochLength::TiedToC), 2000, 1, (3.0, 200.0))
            .unwrap();
        assert_eq!(r.estimate.fract(), 0.0);
        assert_eq!(r.hi - r.lo, 1.0);
    }
}
