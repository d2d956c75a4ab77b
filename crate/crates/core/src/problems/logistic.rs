use std::fs::File;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Draw, Evaluation, OnlineProblem, ProblemError};
use crate::optim::BlockPartition;
use crate::rng::{seeded, StreamRng};

/// Binary logistic regression with a bias term.
///
/// The parameter vector is `[w_0, …, w_{dim−1}, b]`, forming a single `layer` block.
/// Loss is the mean cross-entropy over a minibatch plus `l2/2·‖θ‖²`.
///
/// The bias is not split into its own block: at `θ = 0` a minibatch with balanced labels
/// has an exactly zero bias gradient, and a one-element block would hand a block-wise
/// AdaShift a zero second moment `n` steps later.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticTask {
    /// Row-major `samples × dim`.
    pub features: Vec<f64>,
    /// 0 or 1 per sample.
    pub labels: Vec<f64>,
    pub dim: usize,
    pub batch_size: usize,
    pub l2: f64,
}

impl LogisticTask {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<f64>,
        dim: usize,
        batch_size: usize,
        l2: f64,
    ) -> Result<Self, ProblemError> {
        let bad = |m: String| Err(ProblemError::InvalidParameter(m));
        if dim == 0 || labels.is_empty() || features.len() != labels.len() * dim {
            return bad(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            ));
        }
        if labels.iter().any(|y| *y != 0.0 && *y != 1.0) {
            return bad("labels must be 0 or 1".into());
        }
        if batch_size == 0 || !(l2 >= 0.0 && l2.is_finite()) {
            return bad(format!("batch_size={batch_size} and l2={l2} must be positive / non-negative"));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return bad("features must be finite".into());
        }
        Ok(Self { features, labels, dim, batch_size, l2 })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    /// Number of parameters: weights plus bias.
    pub fn param_dim(&self) -> usize {
        self.dim + 1
    }

    /// Loss and gradient over the whole dataset.
    pub fn full_loss_grad(&self, theta: &[f64]) -> Evaluation {
        let all: Vec<usize> = (0..self.samples()).collect();
        logreg_loss_grad(self, theta, &all)
    }

    /// Fraction of samples whose predicted class matches the label.
    pub fn accuracy(&self, theta: &[f64]) -> f64 {
        let correct = (0..self.samples())
            .filter(|&i| (self.logit(theta, i) > 0.0) == (self.labels[i] == 1.0))
            .count();
        correct as f64 / self.samples() as f64
    }

    fn logit(&self, theta: &[f64], i: usize) -> f64 {
        let w = &theta[..self.dim];
        self.row(i).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + theta[self.dim]
    }

    /// Writes the dataset as CSV: header `x0,…,x{dim−1},label`, one sample per row.
    pub fn write_csv(&self, path: &Path) -> Result<(), ProblemError> {
        let io = |e: csv::Error| ProblemError::Csv { path: path.display().to_string(), message: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(io)?;
        for i in 0..self.samples() {
            let mut rec: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            rec.push((self.labels[i] as u8).to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| ProblemError::Io { path: path.display().to_string(), source: e })
    }

    /// Reads a dataset written by [`LogisticTask::write_csv`] (label in the last column).
    pub fn read_csv(path: &Path, batch_size: usize, l2: f64) -> Result<Self, ProblemError> {
        let name = path.display().to_string();
        let file = File::open(path).map_err(|e| ProblemError::Io { path: name.clone(), source: e })?;
        let mut r = csv::Reader::from_reader(file);
        let width = r.headers().map_err(|e| ProblemError::Csv { path: name.clone(), message: e.to_string() })?.len();
        if width < 2 {
            return Err(ProblemError::Csv { path: name, message: "need at least one feature and a label".into() });
        }
        let (mut features, mut labels) = (Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| ProblemError::Csv { path: name.clone(), message: e.to_string() })?;
            for (j, field) in rec.iter().enumerate() {
                let x: f64 = field.trim().parse().map_err(|_| ProblemError::Csv {
                    path: name.clone(),
                    message: format!("row {}: `{field}` is not a number", line + 2),
                })?;
                if j + 1 == width {
                    labels.push(x);
                } else {
                    features.push(x);
                }
            }
        }
        Self::new(features, labels, width - 1, batch_size, l2)
    }
}

/// Numerically stable `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy over `batch` plus `l2/2·‖θ‖²`, with its exact gradient.
pub fn logreg_loss_grad(task: &LogisticTask, theta: &[f64], batch: &[usize]) -> Evaluation {
    let dim = task.dim;
    let mut gradient = vec![0.0; dim + 1];
    let mut loss = 0.0;
    for &i in batch {
        let z = task.logit(theta, i);
        let y = task.labels[i];
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (gj, xj) in gradient.iter_mut().zip(task.row(i)) {
            *gj += r * xj;
        }
        gradient[dim] += r;
    }
    let scale = 1.0 / batch.len() as f64;
    loss *= scale;
    for (gj, th) in gradient.iter_mut().zip(theta) {
        *gj = *gj * scale + task.l2 * th;
    }
    loss += 0.5 * task.l2 * theta.iter().map(|x| x * x).sum::<f64>();
    Evaluation { loss, gradient }
}

/// Two unit-variance Gaussian clusters whose means sit at `±separation/2` along the
/// diagonal direction `(1,…,1)/√dim`; labels are fair coin flips. Batch size defaults to
/// the full dataset and `l2` to zero.
pub fn make_synthetic_dataset(
    dim: usize,
    n_samples: usize,
    separation: f64,
    seed: u64,
) -> Result<LogisticTask, ProblemError> {
    if dim == 0 || n_samples < 2 || !(separation >= 0.0 && separation.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!(
            "synthetic dataset needs dim >= 1, n_samples >= 2, separation >= 0 (got {dim}, {n_samples}, {separation})"
        )));
    }
    let mut rng = seeded(seed);
    let offset = 0.5 * separation / (dim as f64).sqrt();
    let mut features = Vec::with_capacity(dim * n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let y: bool = rng.random();
        let sign = if y { 1.0 } else { -1.0 };
        for _ in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            features.push(sign * offset + noise);
        }
        labels.push(if y { 1.0 } else { 0.0 });
    }
    LogisticTask::new(features, labels, dim, n_samples, 0.0)
}

impl OnlineProblem for LogisticTask {
    fn dim(&self) -> usize {
        self.param_dim()
    }

    fn draw(&self, _t: u64, rng: &mut StreamRng) -> Draw {
        if self.batch_size >= self.samples() {
            Draw::Deterministic
        } else {
            let n = self.samples();
            Draw::Batch((0..self.batch_size).map(|_| rng.random_range(0..n)).collect())
        }
    }

    fn evaluate(&self, theta: &[f64], draw: &Draw) -> Evaluation {
        match draw {
            Draw::Batch(idx) => logreg_loss_grad(self, theta, idx),
            Draw::Deterministic => self.full_loss_grad(theta),
            Draw::Coefficients(_) => panic!("logistic regression expects minibatch draws"),
        }
    }

    fn objective(&self, theta: &[f64]) -> Option<f64> {
        Some(self.full_loss_grad(theta).loss)
    }

    fn partition(&self) -> BlockPartition {
        BlockPartition::from_sizes(&[("layer", self.dim + 1)]).expect("layer block is non-empty")
    }
}
