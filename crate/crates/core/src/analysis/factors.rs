use super::{check_unit_interval, AnalysisError, Trajectory};

/// Truncation horizon `H` at which the momentum weight `β1^H` falls below `1e−12`;
/// zero when `β1 = 0`.
pub fn default_horizon(beta1: f64) -> usize {
    if beta1 <= 0.0 {
        0
    } else {
        (1e-12f64.ln() / beta1.ln()).ceil() as usize
    }
}

/// `Γ_t = √v_t/α_t − √v_{t−1}/α_{t−1}`, one entry per `v` slot.
pub fn gamma_t(trajectory: &Trajectory, t: u64) -> Result<Vec<f64>, AnalysisError> {
    if t < 2 {
        return Err(AnalysisError::InvalidParameter(format!("Γ_t needs t >= 2, got {t}")));
    }
    let (now, prev) = (trajectory.get(t)?, trajectory.get(t - 1)?);
    Ok(now
        .v
        .iter()
        .zip(&prev.v)
        .map(|(v, vp)| v.sqrt() / now.alpha - vp.sqrt() / prev.alpha)
        .collect())
}

/// Truncated net update factor of the gradient seen at step `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetUpdateEstimate {
    pub t0: u64,
    /// One factor per `v` slot.
    pub k: Vec<f64>,
    pub horizon: usize,
    /// Bound on the omitted terms `Σ_{j>H}`, per `v` slot, using the largest `α` and the
    /// smallest `v` recorded from `t0` on.
    pub tail_bound: Vec<f64>,
}

/// `k(g_{t0}) = Σ_{j=0}^{H} α_{t0+j}/√v_{t0+j} · (1−β1)·β1^j`.
///
/// Steps that did not update the parameters (AdaShift warm-up) contribute nothing.
/// `horizon = None` uses [`default_horizon`].
pub fn net_update_factor(
    trajectory: &Trajectory,
    t0: u64,
    horizon: Option<usize>,
) -> Result<NetUpdateEstimate, AnalysisError> {
    let beta1 = trajectory.beta1;
    check_unit_interval("beta1", beta1, false)?;
    let horizon = horizon.unwrap_or_else(|| default_horizon(beta1));
    let start = trajectory.get(t0)?;
    let slots = start.v.len();
    let first = trajectory.records.partition_point(|r| r.t < t0);
    let window = trajectory.records.get(first..first + horizon + 1).unwrap_or(&[]);
    if window.len() != horizon + 1 {
        return Err(AnalysisError::HorizonExceedsTrajectory {
            t0,
            horizon,
            last: trajectory.last().map_or(0, |r| r.t),
        });
    }
    if let Some(j) = window.iter().enumerate().position(|(j, r)| r.t != t0 + j as u64) {
        return Err(AnalysisError::MissingRecord(t0 + j as u64));
    }

    let mut k = vec![0.0; slots];
    let mut weight = 1.0 - beta1;
    for r in window {
        if r.updated {
            for (ks, v) in k.iter_mut().zip(&r.v) {
                *ks += weight * r.alpha / v.sqrt();
            }
        }
        weight *= beta1;
    }

    let tail_weight = beta1.powi(horizon as i32 + 1);
    let updated: Vec<_> = trajectory.records[first..].iter().filter(|r| r.updated).collect();
    let alpha_max = updated.iter().map(|r| r.alpha).fold(0.0, f64::max);
    let tail_bound = (0..slots)
        .map(|s| {
            if tail_weight == 0.0 {
                return 0.0;
            }
            let v_min = updated.iter().map(|r| r.v[s]).fold(f64::INFINITY, f64::min);
            tail_weight * alpha_max / v_min.sqrt()
        })
        .collect();
    Ok(NetUpdateEstimate { t0, k, horizon, tail_bound })
}

/// Net update factors of the `d` gradients of one limit-cycle epoch of the periodic
/// counterexample, with `α = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochFactors {
    /// `k[i]` belongs to the `(i+1)`-th gradient of the epoch; `k[0]` is the `C` gradient.
    pub k: Vec<f64>,
    pub horizon: usize,
    pub tail_bound: f64,
}

impl EpochFactors {
    /// Smallest gap between cyclically adjacent factors.
    pub fn min_gap(&self) -> f64 {
        let n = self.k.len();
        (0..n).map(|i| (self.k[(i + 1) % n] - self.k[i]).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Runs Adam's `v` recursion on the periodic counterexample for `epochs` epochs, then sums
/// each next-epoch gradient's factor over the following `horizon` steps (so every factor
/// is fully covered by simulated `v` values).
pub fn limit_cycle_factors(
    beta1: f64,
    beta2: f64,
    c: f64,
    d: u64,
    epochs: u64,
    horizon: Option<usize>,
) -> Result<EpochFactors, AnalysisError> {
    check_unit_interval("beta1", beta1, false)?;
    check_unit_interval("beta2", beta2, false)?;
    if d == 0 || !c.is_finite() || epochs == 0 {
        return Err(AnalysisError::InvalidParameter(format!("need d >= 1, finite C, epochs >= 1 (d={d}, C={c})")));
    }
    let horizon = horizon.unwrap_or_else(|| default_horizon(beta1));
    let grad = |t: u64| crate::problems::sequential_gradient(c, d, t);
    let mut v = 0.0;
    let warm = epochs * d;
    for t in 1..=warm {
        v = beta2 * v + (1.0 - beta2) * grad(t) * grad(t);
    }
    let extra = d as usize + horizon;
    let mut vs = Vec::with_capacity(extra);
    for t in warm + 1..=warm + extra as u64 {
        v = beta2 * v + (1.0 - beta2) * grad(t) * grad(t);
        vs.push(v);
    }
    let k = (0..d as usize)
        .map(|i| {
            let mut w = 1.0 - beta1;
            let mut sum = 0.0;
            for vj in &vs[i..=i + horizon] {
                sum += w / vj.sqrt();
                w *= beta1;
            }
            sum
        })
        .collect();
    let v_min = vs.iter().copied().fold(f64::INFINITY, f64::min);
    let tail_bound = beta1.powi(horizon as i32 + 1) / v_min.sqrt();
    Ok(EpochFactors { k, horizon, tail_bound })
}

/// If `k` strictly increases up to some index and strictly decreases after it, with `k[0]`
/// strictly below every other entry, returns the peak index.
pub fn rise_then_fall(k: &[f64]) -> Option<usize> {
    if k.len() < 2 {
        return None;
    }
    let mut peak = 0;
    while peak + 1 < k.len() && k[peak + 1] > k[peak] {
        peak += 1;
    }
    let falls = k[peak..].windows(2).all(|w| w[1] < w[0]);
    let min_first = k[1..].iter().all(|x| *x > k[0]);
    (peak > 0 && falls && min_first).then_some(peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Record;

    fn momentum_like(alpha: f64, beta1: f64, steps: u64, v: f64) -> Trajectory {
        let mut tr = Trajectory::new(vec![0.0], vec![0], beta1, None);
        for t in 1..=steps {
            tr.push(Record {
                t,
                theta: vec![0.0],
                g: vec![1.0],
                m: vec![1.0],
                v: vec![v],
                delta: vec![0.0],
                loss: 0.0,
                alpha,
                updated: true,
            });
        }
        tr
    }

    #[test]
    fn horizon_defaults() {
        assert_eq!(default_horizon(0.0), 0);
        assert_eq!(default_horizon(0.9), 263);
        assert!(0.9f64.powi(263) < 1e-12 && 0.9f64.powi(262) >= 1e-12);
    }

    #[test]
    fn momentum_factor_is_alpha() {
        let tr = momentum_like(0.1, 0.9, 600, 1.0);
        let est = net_update_factor(&tr, 1, Some(500)).unwrap();
        assert!((est.k[0] - 0.1).abs() <= est.tail_bound[0] + 1e-15);
        assert!(est.tail_bound[0] < 1e-20);
    }

    #[test]
    fn zero_beta1_uses_one_term() {
        let tr = momentum_like(0.5, 0.0, 3, 4.0);
        let est = net_update_factor(&tr, 2, None).unwrap();
        assert_eq!(est.horizon, 0);
        assert_eq!(est.k[0], 0.25);
        assert_eq!(est.tail_bound[0], 0.0);
    }

    #[test]
    fn horizon_past_end_is_an_error() {
        let tr = momentum_like(0.1, 0.9, 10, 1.0);
        assert!(matches!(
            net_update_factor(&tr, 5, Some(10)),
            Err(AnalysisError::HorizonExceedsTrajectory { .. })
        ));
    }

    #[test]
    fn gamma_of_constant_and_growing_v() {
        let mut tr = momentum_like(1.0, 0.0, 2, 4.0);
        assert_eq!(gamma_t(&tr, 2).unwrap(), vec![0.0]);
        tr.records[0].v = vec![1.0];
        assert_eq!(gamma_t(&tr, 2).unwrap(), vec![1.0]);
        assert!(gamma_t(&tr, 1).is_err());
    }

    #[test]
    fn shape_detection() {
        assert_eq!(rise_then_fall(&[1.0, 3.0, 4.0, 2.0]), Some(2));
        assert_eq!(rise_then_fall(&[1.0, 2.0, 3.0]), Some(2));
        assert_eq!(rise_then_fall(&[1.0, 3.0, 2.0, 3.0]), None);
        assert_eq!(rise_then_fall(&[2.0, 3.0, 1.0]), None);
        assert_eq!(rise_then_fall(&[2.0, 1.0]), None);
    }

    #[test]
    fn zero_beta1_limit_cycle_rises() {
        let f = limit_cycle_factors(0.0, 0.9, 6.0, 6, 2000, None).unwrap();
        assert_eq!(f.k.len(), 6);
        assert_eq!(rise_then_fall(&f.k), Some(5));
    }
}
