use super::AnalysisError;

/// State after one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: u64,
    /// Parameters after the step.
    pub theta: Vec<f64>,
    /// Gradient used at this step, evaluated at the parameters before it.
    pub g: Vec<f64>,
    /// First moment the step used.
    pub m: Vec<f64>,
    /// Denominator second moment, one entry per `v` slot.
    pub v: Vec<f64>,
    pub delta: Vec<f64>,
    /// Loss of this step's cost function at the parameters before the step.
    pub loss: f64,
    pub alpha: f64,
    /// False for AdaShift warm-up steps.
    pub updated: bool,
}

/// Step records of one run, in increasing `t`.
///
/// A thinned trajectory keeps every k-th record; operations that need consecutive steps
/// report [`AnalysisError::MissingRecord`] on gaps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub theta0: Vec<f64>,
    /// `v_slots[i]` is the index into [`Record::v`] that scales coordinate `i`.
    pub v_slots: Vec<usize>,
    /// `β1` of the optimizer that produced the run, used as the momentum decay in net
    /// update factors.
    pub beta1: f64,
    /// AdaShift queue length, when the run used AdaShift.
    pub shift_n: Option<usize>,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn new(theta0: Vec<f64>, v_slots: Vec<usize>, beta1: f64, shift_n: Option<usize>) -> Self {
        Self { theta0, v_slots, beta1, shift_n, records: Vec::new() }
    }

    /// Appends a record; `t` must exceed the last recorded step.
    pub fn push(&mut self, record: Record) {
        if let Some(last) = self.records.last() {
            assert!(record.t > last.t, "records must be appended in increasing t");
        }
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.theta0.len()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn final_theta(&self) -> &[f64] {
        self.records.last().map_or(&self.theta0, |r| &r.theta)
    }

    pub fn get(&self, t: u64) -> Result<&Record, AnalysisError> {
        self.records
            .binary_search_by_key(&t, |r| r.t)
            .map(|i| &self.records[i])
            .map_err(|_| AnalysisError::MissingRecord(t))
    }

    /// True when records are consecutive steps.
    pub fn is_contiguous(&self) -> bool {
        self.records.windows(2).all(|w| w[1].t == w[0].t + 1)
    }

    /// Parameters before step `t`.
    pub fn theta_before(&self, t: u64) -> Result<&[f64], AnalysisError> {
        if t == 1 {
            Ok(&self.theta0)
        } else {
            self.get(t - 1).map(|r| r.theta.as_slice())
        }
    }

    /// Coordinate `i` of every record's gradient.
    pub fn gradient_series(&self, i: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.g[i]).collect()
    }

    /// Coordinate `i` of every record's parameters.
    pub fn theta_series(&self, i: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.theta[i]).collect()
    }

    /// The `v` entry scaling coordinate `i`, per record.
    pub fn v_series(&self, i: usize) -> Vec<f64> {
        let slot = self.v_slots[i];
        self.records.iter().map(|r| r.v[slot]).collect()
    }
}
