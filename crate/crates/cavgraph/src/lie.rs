//! Real Lie closure of a set of matrices under commutators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::BlockSparseOperator;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LieClosure {
    /// Frobenius-orthonormal real basis of the closure.
    pub basis: Vec<DMatrix<C64>>,
    pub dim: usize,
    /// The dimension cap stopped the iteration before it stabilised.
    pub capped: bool,
}

/// Real Frobenius inner product `Re tr(A† B)`.
pub fn frobenius_inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Orthonormal real span under modified Gram–Schmidt (two passes).
#[derive(Debug, Clone, Default)]
pub struct RealSpan {
    pub basis: Vec<DMatrix<C64>>,
}

impl RealSpan {
    /// Adds `m` if it is independent of the span at tolerance `tol`; returns whether it was added.
    pub fn insert(&mut self, m: &DMatrix<C64>, tol: f64) -> bool {
        let n0 = m.norm();
        if n0 <= tol {
            return false;
        }
        let mut r = m / C64::new(n0, 0.0);
        for _ in 0..2 {
            for q in &self.basis {
                let c = frobenius_inner(q, &r);
                r -= q * C64::new(c, 0.0);
            }
        }
        let n = r.norm();
        if n <= tol {
            return false;
        }
        self.basis.push(r / C64::new(n, 0.0));
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Closes the real span of `generators` under commutators. Stops when every pair
/// of basis elements has been bracketed or the dimension reaches `cap`.
pub fn lie_closure_dense(generators: &[DMatrix<C64>], tol: f64, cap: usize) -> LieClosure {
    let mut span = RealSpan::default();
    for g in generators {
        span.insert(g, tol);
    }
    let mut capped = false;
    let mut i = 1;
    'outer: while i < span.dim() {
        for j in 0..i {
            if span.dim() >= cap {
                capped = true;
                break 'outer;
            }
            let (a, b) = (&span.basis[j], &span.basis[i]);
            let c = a * b - b * a;
            span.insert(&c, tol);
        }
        i += 1;
    }
    let dim = span.dim();
    LieClosure { basis: span.basis, dim, capped }
}

/// Closure of block-sparse generators on their common space, cap `4·total_dim²`.
pub fn lie_closure(generators: &[BlockSparseOperator], tol: f64) -> Result<LieClosure> {
    let Some(first) = generators.first() else {
        return Ok(LieClosure { basis: Vec::new(), dim: 0, capped: false });
    };
    if generators.iter().any(|g| !g.space.same_as(&first.space)) {
        return Err(Error::SpaceMismatch);
    }
    let n = first.dim();
    let dense: Vec<DMatrix<C64>> = generators.iter().map(BlockSparseOperator::to_dense).collect();
    Ok(lie_closure_dense(&dense, tol, 4 * n * n))
}

/// Dimension of the span of `P M P` over the closure basis, with `P` the
/// projection onto the leading `k` basis indices.
pub fn projected_rank(closure: &LieClosure, k: usize, tol: f64) -> usize {
    let mut span = RealSpan::default();
    for m in &closure.basis {
        span.insert(&m.view((0, 0), (k, k)).into_owned(), tol);
    }
    span.dim()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i() -> C64 {
        C64::new(0.0, 1.0)
    }

    #[test]
    fn pauli_closure_is_su2() {
        let s1 = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), i(), i(), C64::new(0.0, 0.0)]);
        let s3 = DMatrix::from_row_slice(2, 2, &[i(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), -i()]);
        let c = lie_closure_dense(&[s1, s3], DEFAULT_TOL, 16);
        assert_eq!(c.dim, 3);
        assert!(!c.capped);
        for a in &c.basis {
            for b in &c.basis {
                let expect = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                assert!((frobenius_inner(a, b) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cap_is_reported() {
        let s1 = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), i(), i(), C64::new(0.0, 0.0)]);
        let s3 = DMatrix::from_row_slice(2, 2, &[i(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), -i()]);
        let c = lie_closure_dense(&[s1, s3], DEFAULT_TOL, 2);
        assert!(c.capped);
        assert_eq!(c.dim, 2);
    }
}
