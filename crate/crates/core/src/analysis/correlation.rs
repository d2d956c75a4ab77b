use rand::Rng;

use super::{AnalysisError, Trajectory};
use crate::rng::seeded;

/// Pearson correlation coefficient, clamped to `[−1, 1]` against rounding.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "pearson needs two series of equal length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Averaged correlations between gradients and second-moment estimates along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// `(n, ρ)`: `corr(g_t[i], g_{t−n}[i])` averaged over coordinates, `n = 1..=n_max`.
    pub temporal: Vec<(usize, f64)>,
    /// `(n, ρ)`: `corr(g_t[i], g_{t−n}[j])` averaged over sampled pairs `i ≠ j`,
    /// `n = 0..=n_max`. Empty for one-dimensional problems.
    pub spatial: Vec<(usize, f64)>,
    /// `corr(g_t²[i], v_t[i])` averaged over coordinates.
    pub g2_v: f64,
    /// For AdaShift runs, `(n, corr(g_{t−n}²[i], v_t[i]))`: `v_t` against its own input.
    pub g2_v_shifted: Option<(usize, f64)>,
    /// Number of (quantity, coordinate) correlations skipped for zero variance.
    pub skipped: usize,
}

fn lagged(a: &[f64], b: &[f64], n: usize) -> Result<f64, AnalysisError> {
    pearson(&a[n..], &b[..b.len() - n])
}

struct Mean {
    sum: f64,
    count: usize,
}

impl Mean {
    fn new() -> Self {
        Self { sum: 0.0, count: 0 }
    }

    fn add(&mut self, r: Result<f64, AnalysisError>, skipped: &mut usize) -> Result<(), AnalysisError> {
        match r {
            Ok(x) => {
                self.sum += x;
                self.count += 1;
                Ok(())
            }
            Err(AnalysisError::Degenerate(_)) => {
                *skipped += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn finish(&self, what: &str) -> Result<f64, AnalysisError> {
        if self.count == 0 {
            Err(AnalysisError::Degenerate(format!("every coordinate degenerate for {what}")))
        } else {
            Ok(self.sum / self.count as f64)
        }
    }
}

/// Temporal, spatial and gradient-vs-`v` correlations of a contiguous trajectory.
///
/// The `g²`-vs-`v` correlations use only steps that updated the parameters. Spatial pairs
/// are drawn with `seed`; coordinates with zero variance are skipped and counted.
pub fn correlation_report(
    trajectory: &Trajectory,
    n_max: usize,
    pair_samples: usize,
    seed: u64,
) -> Result<CorrelationReport, AnalysisError> {
    if !trajectory.is_contiguous() {
        return Err(AnalysisError::Unsupported("correlations need a contiguous trajectory".into()));
    }
    let len = trajectory.len();
    if len < n_max + 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "trajectory of {len} steps is too short for lag {n_max}"
        )));
    }
    let dim = trajectory.dim();
    let grads: Vec<Vec<f64>> = (0..dim).map(|i| trajectory.gradient_series(i)).collect();
    let mut skipped = 0;

    let mut temporal = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut acc = Mean::new();
        for g in &grads {
            acc.add(lagged(g, g, n), &mut skipped)?;
        }
        temporal.push((n, acc.finish("temporal correlation")?));
    }

    let mut spatial = Vec::new();
    if dim > 1 && pair_samples > 0 {
        let mut rng = seeded(seed);
        let pairs: Vec<(usize, usize)> = (0..pair_samples)
            .map(|_| {
                let i = rng.random_range(0..dim);
                let j = (i + rng.random_range(1..dim)) % dim;
                (i, j)
            })
            .collect();
        for n in 0..=n_max {
            let mut acc = Mean::new();
            for &(i, j) in &pairs {
                acc.add(lagged(&grads[i], &grads[j], n), &mut skipped)?;
            }
            spatial.push((n, acc.finish("spatial correlation")?));
        }
    }

    let updated: Vec<usize> = (0..len).filter(|&r| trajectory.records[r].updated).collect();
    let mut acc = Mean::new();
    for (g, &slot) in grads.iter().zip(&trajectory.v_slots).take(dim) {
        let g2: Vec<f64> = updated.iter().map(|&r| g[r].powi(2)).collect();
        let v: Vec<f64> = updated.iter().map(|&r| trajectory.records[r].v[slot]).collect();
        acc.add(pearson(&g2, &v), &mut skipped)?;
    }
    let g2_v = acc.finish("g² vs v")?;

    let g2_v_shifted = match trajectory.shift_n {
        Some(n) => {
            let rows: Vec<usize> = updated.iter().copied().filter(|&r| r >= n).collect();
            let mut acc = Mean::new();
            for (g, &slot) in grads.iter().zip(&trajectory.v_slots).take(dim) {
                let g2: Vec<f64> = rows.iter().map(|&r| g[r - n].powi(2)).collect();
                let v: Vec<f64> = rows.iter().map(|&r| trajectory.records[r].v[slot]).collect();
                acc.add(pearson(&g2, &v), &mut skipped)?;
            }
            Some((n, acc.finish("shifted g² vs v")?))
        }
        None => None,
    };

    Ok(CorrelationReport { temporal, spatial, g2_v, g2_v_shifted, skipped })
}
