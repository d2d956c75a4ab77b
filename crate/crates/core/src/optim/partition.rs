use std::ops::Range;

use super::OptimError;

/// A named slice of the flat parameter vector, e.g. one layer's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub label: String,
    pub values: Vec<f64>,
}

impl ParamBlock {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self { label: label.into(), values }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub label: String,
    pub range: Range<usize>,
}

/// Ordered, disjoint blocks covering `0..dim` exactly once.
///
/// Block-wise adaptation in AdaShift keeps one adaptive scale per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Block>,
    dim: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Block>, dim: usize) -> Result<Self, OptimError> {
        if dim == 0 {
            return Err(OptimError::Partition("dimension must be positive".into()));
        }
        let mut covered = vec![false; dim];
        for b in &blocks {
            if b.range.is_empty() {
                return Err(OptimError::Partition(format!("block `{}` is empty", b.label)));
            }
            if b.range.end > dim {
                return Err(OptimError::Partition(format!(
                    "block `{}` ends at {} beyond dimension {dim}",
                    b.label, b.range.end
                )));
            }
            for i in b.range.clone() {
                if covered[i] {
                    return Err(OptimError::Partition(format!(
                        "index {i} covered more than once (block `{}`)",
                        b.label
                    )));
                }
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(OptimError::Partition(format!("index {i} not covered")));
        }
        Ok(Self { blocks, dim })
    }

    /// The whole vector as one block.
    pub fn single(dim: usize) -> Self {
        Self::new(vec![Block { label: "all".into(), range: 0..dim }], dim)
            .expect("single block of positive dimension")
    }

    /// One block per coordinate.
    pub fn per_coordinate(dim: usize) -> Self {
        let blocks = (0..dim).map(|i| Block { label: format!("c{i}"), range: i..i + 1 }).collect();
        Self::new(blocks, dim).expect("per-coordinate partition of positive dimension")
    }

    /// Consecutive blocks with the given labels and sizes.
    pub fn from_sizes<S: AsRef<str>>(sizes: &[(S, usize)]) -> Result<Self, OptimError> {
        let mut start = 0;
        let mut blocks = Vec::with_capacity(sizes.len());
        for (label, len) in sizes {
            blocks.push(Block { label: label.as_ref().to_string(), range: start..start + len });
            start += len;
        }
        Self::new(blocks, start)
    }

    /// Partition and flat vector for a list of named blocks, in order.
    pub fn from_param_blocks(params: &[ParamBlock]) -> Result<(Self, Vec<f64>), OptimError> {
        let sizes: Vec<(&str, usize)> =
            params.iter().map(|p| (p.label.as_str(), p.values.len())).collect();
        let partition = Self::from_sizes(&sizes)?;
        let flat = params.iter().flat_map(|p| p.values.iter().copied()).collect();
        Ok((partition, flat))
    }

    /// Splits a flat vector back into named blocks.
    pub fn split(&self, flat: &[f64]) -> Vec<ParamBlock> {
        self.blocks
            .iter()
            .map(|b| ParamBlock::new(b.label.clone(), flat[b.range.clone()].to_vec()))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Index of the block holding coordinate `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.range.contains(&i))
            .expect("partition covers every coordinate")
    }
}
