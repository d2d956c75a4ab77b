use std::collections::VecDeque;

use super::{Algorithm, BlockPartition, OptimError, OptimizerConfig};

/// Evolving optimizer state.
///
/// `v` is element-wise for Adam, AMSGrad and AdaShift with [`super::SpatialOp::Identity`];
/// for block-wise AdaShift it holds one scalar per block of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// AMSGrad historical maximum of the denominator's second-moment estimate.
    pub v_hat: Vec<f64>,
    /// AdaShift gradient queue, oldest at the front.
    pub window: VecDeque<Vec<f64>>,
    /// AdaShift running `β2^k` over the `k` moment updates performed so far.
    pub p: f64,
}

impl OptimizerState {
    /// Zero state for `config` over a vector of dimension `dim` split by `partition`.
    pub fn init(
        config: &OptimizerConfig,
        dim: usize,
        partition: &BlockPartition,
    ) -> Result<Self, OptimError> {
        if partition.dim() != dim {
            return Err(OptimError::Partition(format!(
                "partition covers {} coordinates but the parameter vector has {dim}",
                partition.dim()
            )));
        }
        config.validate()?;
        let v_len = match config.algorithm {
            Algorithm::AdaShift if config.spatial.is_blockwise() => partition.len(),
            _ => dim,
        };
        let v_hat_len = if config.algorithm == Algorithm::AmsGrad { dim } else { 0 };
        Ok(Self {
            t: 0,
            m: vec![0.0; dim],
            v: vec![0.0; v_len],
            v_hat: vec![0.0; v_hat_len],
            window: VecDeque::with_capacity(config.shift_n + 1),
            p: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::SpatialOp;

    #[test]
    fn adam_starts_at_zero() {
        let cfg = OptimizerConfig::adam(0.001, 0.9, 0.999);
        let s = OptimizerState::init(&cfg, 3, &BlockPartition::single(3)).unwrap();
        assert_eq!(s.t, 0);
        assert_eq!(s.m, vec![0.0; 3]);
        assert_eq!(s.v, vec![0.0; 3]);
    }

    #[test]
    fn adashift_starts_with_empty_window() {
        let cfg = OptimizerConfig::adashift(0.01, 0.9, 0.999, 10, SpatialOp::Max);
        let s = OptimizerState::init(&cfg, 5, &BlockPartition::single(5)).unwrap();
        assert!(s.window.is_empty());
        assert_eq!(s.p, 1.0);
        assert_eq!(s.v, vec![0.0]);
    }

    #[test]
    fn amsgrad_max_starts_at_zero() {
        let cfg = OptimizerConfig::amsgrad(0.001, 0.0, 0.999);
        let s = OptimizerState::init(&cfg, 2, &BlockPartition::single(2)).unwrap();
        assert_eq!(s.v_hat, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_partition_not_covering_dim() {
        let cfg = OptimizerConfig::sgd(0.1);
        let err = OptimizerState::init(&cfg, 4, &BlockPartition::single(3)).unwrap_err();
        assert!(matches!(err, OptimError::Partition(_)));
    }
}
