//! Operators on a truncated space: the path algebra (block diagonal, exact) and
//! the atom-only controls (inter-block, truncated at the h frontier).

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::config::{act_edge, alpha, Configuration};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Graph, Path};
use crate::space::{StateVector, TruncatedSpace};
use crate::sparse::SparseMatrix;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone)]
pub struct BlockSparseOperator {
    pub space: Arc<TruncatedSpace>,
    pub matrix: SparseMatrix,
    /// Set by construction: true for everything built from the path algebra.
    pub block_diagonal: bool,
    /// Basis indices whose image under the untruncated operator leaves the truncation.
    pub leakage_mask: BTreeSet<usize>,
}

impl BlockSparseOperator {
    fn new(
        space: &Arc<TruncatedSpace>,
        matrix: SparseMatrix,
        block_diagonal: bool,
        leakage_mask: BTreeSet<usize>,
    ) -> Self {
        BlockSparseOperator { space: space.clone(), matrix, block_diagonal, leakage_mask }
    }

    pub fn zero(space: &Arc<TruncatedSpace>) -> Self {
        Self::new(space, SparseMatrix::zeros(space.total_dim), true, BTreeSet::new())
    }

    pub fn identity(space: &Arc<TruncatedSpace>) -> Self {
        Self::new(space, SparseMatrix::identity(space.total_dim), true, BTreeSet::new())
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim
    }

    fn check(&self, other: &BlockSparseOperator) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn add(&self, other: &BlockSparseOperator) -> Result<Self> {
        self.check(other)?;
        let mask = self.leakage_mask.union(&other.leakage_mask).copied().collect();
        Ok(Self::new(&self.space, self.matrix.add(&other.matrix), self.block_diagonal && other.block_diagonal, mask))
    }

    pub fn sub(&self, other: &BlockSparseOperator) -> Result<Self> {
        self.add(&other.scale(re(-1.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(&self.space, self.matrix.scale(s), self.block_diagonal, self.leakage_mask.clone())
    }

    /// `self · other`. A column leaks if it leaks in `other` or if `other` feeds it
    /// into a row where `self` leaks.
    pub fn compose(&self, other: &BlockSparseOperator) -> Result<Self> {
        self.check(other)?;
        let mut mask = other.leakage_mask.clone();
        if !self.leakage_mask.is_empty() {
            for (i, j, _) in other.matrix.triplets() {
                if self.leakage_mask.contains(&i) {
                    mask.insert(j);
                }
            }
        }
        Ok(Self::new(&self.space, self.matrix.mul(&other.matrix), self.block_diagonal && other.block_diagonal, mask))
    }

    pub fn adjoint(&self) -> Self {
        Self::new(&self.space, self.matrix.adjoint(), self.block_diagonal, self.leakage_mask.clone())
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &BlockSparseOperator) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if !self.space.same_as(&psi.space) {
            return Err(Error::SpaceMismatch);
        }
        StateVector::from_amplitudes(&self.space, self.matrix.apply(&psi.amplitudes))
    }

    pub fn apply_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        self.matrix.apply(x)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    /// Largest modulus of an entry joining two different blocks.
    pub fn inter_block_max(&self) -> f64 {
        self.matrix
            .triplets()
            .filter(|&(i, j, _)| self.space.block_index(i) != self.space.block_index(j))
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Dense sub-block of block `k`.
    pub fn block(&self, k: usize) -> DMatrix<C64> {
        self.matrix.dense_block(self.space.block_range(k))
    }
}

fn positive(g: &Graph, e: DirectedEdge) -> Result<usize> {
    if e.edge >= g.edge_count() {
        return Err(Error::UnknownEdge(format!("#{}", e.edge + 1)));
    }
    if !e.positive {
        return Err(Error::NotPositive);
    }
    Ok(e.edge)
}

/// `A_e|b⟩ = α(b,e)|e·b⟩`, zero when `e·b` is `Nil` or irregular.
pub fn op_a(sp: &Arc<TruncatedSpace>, e: DirectedEdge) -> Result<BlockSparseOperator> {
    let g = &sp.graph;
    if e.edge >= g.edge_count() {
        return Err(Error::UnknownEdge(format!("#{}", e.edge + 1)));
    }
    let mut trip = Vec::new();
    for i in 0..sp.total_dim {
        let b = sp.config(i);
        if let Some(c) = act_edge(g, e, b).config() {
            if c.is_regular() {
                let j = sp.index_of(c).expect("edge actions stay inside a block");
                trip.push((j, i, re(alpha(b, e))));
            }
        }
    }
    Ok(BlockSparseOperator::new(sp, SparseMatrix::from_triplets(sp.total_dim, trip), true, BTreeSet::new()))
}

/// `A_{eN} ⋯ A_{e1}` for an arbitrary edge word; unchained words give zero.
pub fn op_a_word(sp: &Arc<TruncatedSpace>, word: &[DirectedEdge]) -> Result<BlockSparseOperator> {
    let mut acc = BlockSparseOperator::identity(sp);
    for &d in word {
        acc = op_a(sp, d)?.compose(&acc)?;
    }
    Ok(acc)
}

pub fn op_a_path(sp: &Arc<TruncatedSpace>, p: &Path) -> Result<BlockSparseOperator> {
    op_a_word(sp, p.edges())
}

pub fn op_diag(sp: &Arc<TruncatedSpace>, f: impl Fn(&Configuration) -> C64) -> BlockSparseOperator {
    let trip = (0..sp.total_dim).map(|i| (i, i, f(sp.config(i))));
    BlockSparseOperator::new(sp, SparseMatrix::from_triplets(sp.total_dim, trip), true, BTreeSet::new())
}

/// `X ⊗ 1` for an atom-space matrix `x`, truncated; missing targets go to the mask.
pub fn op_atom(sp: &Arc<TruncatedSpace>, x: &DMatrix<C64>) -> Result<BlockSparseOperator> {
    let d = sp.graph.vertex_count();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch(format!("atom matrix must be {d}x{d}, got {}x{}", x.nrows(), x.ncols())));
    }
    let mut trip = Vec::new();
    let mut mask = BTreeSet::new();
    let mut diagonal_only = true;
    for i in 0..sp.total_dim {
        let b = sp.config(i);
        for w in 0..d {
            let v = x[(w, b.level)];
            if v == re(0.0) {
                continue;
            }
            if w != b.level {
                diagonal_only = false;
            }
            match sp.index_of(&Configuration::new(w, b.photons.clone())) {
                Some(j) => trip.push((j, i, v)),
                None => {
                    mask.insert(i);
                }
            }
        }
    }
    let m = SparseMatrix::from_triplets(sp.total_dim, trip);
    Ok(BlockSparseOperator::new(sp, m, diagonal_only, mask))
}

/// σ1 on the edge levels of a positive edge, as a d×d atom matrix.
pub fn atom_x(g: &Graph, e: usize) -> DMatrix<C64> {
    let d = g.vertex_count();
    let (i, t) = (g.edges[e].from, g.edges[e].to);
    let mut m = DMatrix::zeros(d, d);
    m[(i, t)] = re(1.0);
    m[(t, i)] = re(1.0);
    m
}

/// σ3 on the edge levels: +1 on i(e), −1 on t(e).
pub fn atom_y(g: &Graph, e: usize) -> DMatrix<C64> {
    let d = g.vertex_count();
    let mut m = DMatrix::zeros(d, d);
    m[(g.edges[e].from, g.edges[e].from)] = re(1.0);
    m[(g.edges[e].to, g.edges[e].to)] = re(-1.0);
    m
}

pub fn op_x(sp: &Arc<TruncatedSpace>, e: DirectedEdge) -> Result<BlockSparseOperator> {
    let k = positive(&sp.graph, e)?;
    op_atom(sp, &atom_x(&sp.graph, k))
}

pub fn op_y(sp: &Arc<TruncatedSpace>, e: DirectedEdge) -> Result<BlockSparseOperator> {
    let k = positive(&sp.graph, e)?;
    let (i, t) = (sp.graph.edges[k].from, sp.graph.edges[k].to);
    Ok(op_diag(sp, |b| {
        if b.level == i {
            re(1.0)
        } else if b.level == t {
            re(-1.0)
        } else {
            re(0.0)
        }
    }))
}

/// `Z^(e) = A_e + A_ē`.
pub fn op_z(sp: &Arc<TruncatedSpace>, e: DirectedEdge) -> Result<BlockSparseOperator> {
    positive(&sp.graph, e)?;
    op_a(sp, e)?.add(&op_a(sp, e.reversed())?)
}

/// `H_0 = Σ_e ω_C(e) b(e)`.
pub fn op_h0(sp: &Arc<TruncatedSpace>) -> BlockSparseOperator {
    let g = &sp.graph;
    op_diag(sp, |b| re(b.photons.iter().zip(&g.edges).map(|(&n, e)| e.omega_c * n as f64).sum()))
}

/// `H_I = Σ_{e ∈ E} ω_I(e) A_e`, summed over both directions.
pub fn op_hi(sp: &Arc<TruncatedSpace>) -> Result<BlockSparseOperator> {
    let mut acc = BlockSparseOperator::zero(sp);
    for (k, e) in sp.graph.edges.iter().enumerate() {
        acc = acc.add(&op_z(sp, DirectedEdge::pos(k))?.scale(re(e.omega_i)))?;
    }
    Ok(acc)
}

/// Drift `H_D = Σ_e ω_A(e) Y^(e) + H_0 + H_I` with one σ3 term per edge.
pub fn op_hd(sp: &Arc<TruncatedSpace>) -> Result<BlockSparseOperator> {
    let mut acc = op_h0(sp).add(&op_hi(sp)?)?;
    for (k, e) in sp.graph.edges.iter().enumerate() {
        acc = acc.add(&op_y(sp, DirectedEdge::pos(k))?.scale(re(e.omega_a)))?;
    }
    Ok(acc)
}

/// `H_X = X ⊗ 1 + H_0 + H_I` for a Hermitian atom matrix.
pub fn op_hx(sp: &Arc<TruncatedSpace>, x_atom: &DMatrix<C64>) -> Result<BlockSparseOperator> {
    if !x_atom.is_square() {
        return Err(Error::DimensionMismatch("atom matrix must be square".into()));
    }
    let defect = (x_atom - x_atom.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    op_atom(sp, x_atom)?.add(&op_h0(sp))?.add(&op_hi(sp)?)
}

/// `H_{x,y} = H_D + Σ_e (x_e X^(e) + y_e Y^(e))`, controls indexed by positive edge.
pub fn op_hxy(sp: &Arc<TruncatedSpace>, x: &[f64], y: &[f64]) -> Result<BlockSparseOperator> {
    let m = sp.graph.edge_count();
    if x.len() != m || y.len() != m {
        return Err(Error::DimensionMismatch(format!("expected {m} control values per field")));
    }
    let mut acc = op_hd(sp)?;
    for k in 0..m {
        if x[k] != 0.0 {
            acc = acc.add(&op_x(sp, DirectedEdge::pos(k))?.scale(re(x[k])))?;
        }
        if y[k] != 0.0 {
            acc = acc.add(&op_y(sp, DirectedEdge::pos(k))?.scale(re(y[k])))?;
        }
    }
    Ok(acc)
}

/// `K_v = |v⟩⟨v| ⊗ 1 − 1/|V|`.
pub fn op_k(sp: &Arc<TruncatedSpace>, v: usize) -> BlockSparseOperator {
    let shift = 1.0 / sp.graph.vertex_count() as f64;
    op_diag(sp, |b| re(if b.level == v { 1.0 } else { 0.0 } - shift))
}

/// `[K_w, [K_v, H_D]]` with `v = i(e)`, `w = t(e)`; equals `−ω_I Z^(e)`.
pub fn generate_z_by_commutators(sp: &Arc<TruncatedSpace>, e: DirectedEdge) -> Result<BlockSparseOperator> {
    let k = positive(&sp.graph, e)?;
    let (v, w) = (sp.graph.edges[k].from, sp.graph.edges[k].to);
    let hd = op_hd(sp)?;
    op_k(sp, w).commutator(&op_k(sp, v).commutator(&hd)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named_graph;

    #[test]
    fn k2_drift_first_block() {
        let g = named_graph("K2").unwrap();
        let sp = TruncatedSpace::new(&g, 2).unwrap();
        let hd = op_hd(&sp).unwrap();
        // Block μ = 1 in basis (lower, 1 photon), (upper, 0 photons): σ3 + n on the
        // diagonal, √1 coupling off it.
        let b = hd.block(1);
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(1.0)]));
        assert_eq!(hd.block(0)[(0, 0)], re(-1.0));
        assert!(hd.block_diagonal && hd.inter_block_max() == 0.0);
    }

    #[test]
    fn x_leaks_only_at_frontier() {
        let g = named_graph("K2").unwrap();
        let sp = TruncatedSpace::new(&g, 2).unwrap();
        let x = op_x(&sp, DirectedEdge::pos(0)).unwrap();
        assert!(!x.block_diagonal);
        // Only |lower, 2 photons⟩ (h = 2) maps to |upper, 2⟩ with h = 3.
        let leaking: Vec<&Configuration> = x.leakage_mask.iter().map(|&i| sp.config(i)).collect();
        assert_eq!(leaking, vec![&Configuration::new(0, vec![2])]);
        assert!(op_x(&sp, DirectedEdge::neg(0)).is_err());
    }

    #[test]
    fn unchained_word_is_zero() {
        let g = named_graph("cascade").unwrap();
        let sp = TruncatedSpace::new(&g, 4).unwrap();
        let w = op_a_word(&sp, &[DirectedEdge::pos(0), DirectedEdge::pos(0)]).unwrap();
        assert_eq!(w.matrix.nnz(), 0);
        let p = g.straight_path(2, 0).unwrap();
        assert!(op_a_path(&sp, &p).unwrap().matrix.nnz() > 0);
    }

    #[test]
    fn commutator_identity_on_cascade() {
        let g = named_graph("cascade").unwrap();
        let sp = TruncatedSpace::new(&g, 5).unwrap();
        for k in 0..2 {
            let lhs = generate_z_by_commutators(&sp, DirectedEdge::pos(k)).unwrap();
            let z = op_z(&sp, DirectedEdge::pos(k)).unwrap();
            assert!(lhs.add(&z).unwrap().matrix.frobenius_norm() < 1e-12);
        }
    }
}
