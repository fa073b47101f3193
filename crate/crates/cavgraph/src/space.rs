//! Finite unions of blocks and state vectors on them.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::blocks::{enumerate_blocks, Block, BlockLabel};
use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// All blocks with pseudo-energy ≤ `h_max`, laid out contiguously in
/// `enumerate_blocks` order.
#[derive(Debug)]
pub struct TruncatedSpace {
    pub graph: Graph,
    pub h_max: i64,
    pub blocks: Vec<Block>,
    pub offsets: Vec<usize>,
    pub total_dim: usize,
    label_index: HashMap<BlockLabel, usize>,
    config_index: HashMap<Configuration, usize>,
    block_of_index: Vec<usize>,
}

impl TruncatedSpace {
    pub fn new(graph: &Graph, h_max: i64) -> Result<Arc<TruncatedSpace>> {
        let blocks = enumerate_blocks(graph, h_max)?;
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut label_index = HashMap::new();
        let mut config_index = HashMap::new();
        let mut block_of_index = Vec::new();
        let mut total = 0;
        for (k, b) in blocks.iter().enumerate() {
            offsets.push(total);
            label_index.insert(b.label.clone(), k);
            for (j, c) in b.basis.iter().enumerate() {
                config_index.insert(c.clone(), total + j);
                block_of_index.push(k);
            }
            total += b.dim();
        }
        Ok(Arc::new(TruncatedSpace {
            graph: graph.clone(),
            h_max,
            blocks,
            offsets,
            total_dim: total,
            label_index,
            config_index,
            block_of_index,
        }))
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.config_index.get(c).copied()
    }

    pub fn config(&self, i: usize) -> &Configuration {
        let k = self.block_of_index[i];
        &self.blocks[k].basis[i - self.offsets[k]]
    }

    /// Block number of global index `i`.
    pub fn block_index(&self, i: usize) -> usize {
        self.block_of_index[i]
    }

    pub fn block_by_label(&self, label: &BlockLabel) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.blocks[k].dim()
    }

    /// Flat basis in global index order.
    pub fn basis(&self) -> Vec<Configuration> {
        (0..self.total_dim).map(|i| self.config(i).clone()).collect()
    }

    pub fn same_as(&self, other: &TruncatedSpace) -> bool {
        std::ptr::eq(self, other)
            || (self.h_max == other.h_max && self.total_dim == other.total_dim && self.graph == other.graph)
    }
}

/// Amplitudes over a truncated space's union basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub space: Arc<TruncatedSpace>,
    pub amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn zeros(space: &Arc<TruncatedSpace>) -> Self {
        StateVector { space: space.clone(), amplitudes: DVector::zeros(space.total_dim) }
    }

    pub fn from_amplitudes(space: &Arc<TruncatedSpace>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.total_dim
            )));
        }
        Ok(StateVector { space: space.clone(), amplitudes })
    }

    pub fn basis_state(space: &Arc<TruncatedSpace>, c: &Configuration) -> Result<Self> {
        let i = space.index_of(c).ok_or_else(|| {
            Error::DimensionMismatch(format!("{} lies outside the truncation", c.display(&space.graph)))
        })?;
        let mut s = StateVector::zeros(space);
        s.amplitudes[i] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Sparse description `(configuration, amplitude)`; unknown configurations are errors.
    pub fn from_entries(space: &Arc<TruncatedSpace>, entries: &[(Configuration, C64)]) -> Result<Self> {
        let mut s = StateVector::zeros(space);
        for (c, a) in entries {
            let i = space.index_of(c).ok_or_else(|| {
                Error::DimensionMismatch(format!("{} lies outside the truncation", c.display(&space.graph)))
            })?;
            s.amplitudes[i] += *a;
        }
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        StateVector { space: self.space.clone(), amplitudes: self.amplitudes.unscale(n) }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if !self.space.same_as(&other.space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn block_component(&self, label: &BlockLabel) -> Option<DVector<C64>> {
        let k = self.space.block_by_label(label)?;
        Some(self.amplitudes.rows_range(self.space.block_range(k)).into_owned())
    }

    /// Σ|ψ^(label)|² for every block, in space order.
    pub fn block_populations(&self) -> Vec<f64> {
        (0..self.space.blocks.len())
            .map(|k| self.amplitudes.rows_range(self.space.block_range(k)).norm_squared())
            .collect()
    }

    /// Largest pseudo-energy carrying amplitude above `tol`.
    pub fn max_support_h(&self, tol: f64) -> Option<i64> {
        (0..self.space.total_dim)
            .filter(|&i| self.amplitudes[i].norm() > tol)
            .map(|i| self.space.blocks[self.space.block_index(i)].h)
            .max()
    }

    /// Same amplitudes on a larger (or equal) truncation of the same graph.
    pub fn embed(&self, target: &Arc<TruncatedSpace>) -> Result<StateVector> {
        let mut out = StateVector::zeros(target);
        for i in 0..self.space.total_dim {
            let a = self.amplitudes[i];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let j = target.index_of(self.space.config(i)).ok_or(Error::SpaceMismatch)?;
            out.amplitudes[j] = a;
        }
        Ok(out)
    }
}
