//! Row-compressed complex matrices with a fixed in-row column order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Square sparse matrix; each row holds `(column, value)` sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix { n, rows: vec![Vec::new(); n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMatrix::zeros(n);
        for i in 0..n {
            m.rows[i].push((i, C64::new(1.0, 0.0)));
        }
        m
    }

    /// Builds from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut m = SparseMatrix::zeros(n);
        for (i, j, v) in triplets {
            m.rows[i].push((j, v));
        }
        for row in &mut m.rows {
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, C64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some((lj, lv)) if *lj == j => *lv += v,
                    _ => merged.push((j, v)),
                }
            }
            merged.retain(|&(_, v)| v != zero());
            *row = merged;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, C64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rows[i].binary_search_by_key(&j, |&(c, _)| c).map(|k| self.rows[i][k].1).unwrap_or_else(|_| zero())
    }

    /// Row-major `(row, col, value)` triplets.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            for (_, v) in row.iter_mut() {
                *v *= s;
            }
            row.retain(|&(_, v)| v != zero());
        }
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = SparseMatrix::zeros(self.n);
        for i in 0..self.n {
            let (a, b) = (&self.rows[i], &other.rows[i]);
            let (mut p, mut q) = (0, 0);
            let row = &mut out.rows[i];
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&(ja, va)), Some(&(jb, vb))) if ja == jb => {
                        p += 1;
                        q += 1;
                        (ja, va + vb)
                    }
                    (Some(&(ja, va)), Some(&(jb, _))) if ja < jb => {
                        p += 1;
                        (ja, va)
                    }
                    (Some(_), Some(&(jb, vb))) => {
                        q += 1;
                        (jb, vb)
                    }
                    (Some(&(ja, va)), None) => {
                        p += 1;
                        (ja, va)
                    }
                    (None, Some(&(jb, vb))) => {
                        q += 1;
                        (jb, vb)
                    }
                    (None, None) => unreachable!(),
                };
                if next.1 != zero() {
                    row.push(next);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &SparseMatrix) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Product `self · other`, accumulating each row in column order.
    pub fn mul(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = SparseMatrix::zeros(self.n);
        let mut acc: Vec<C64> = vec![zero(); self.n];
        let mut marked = vec![false; self.n];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.n {
            for &(k, a) in &self.rows[i] {
                for &(j, b) in &other.rows[k] {
                    if !marked[j] {
                        marked[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j] != zero() {
                    out.rows[i].push((j, acc[j]));
                }
                acc[j] = zero();
                marked[j] = false;
            }
            touched.clear();
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        SparseMatrix::from_triplets(self.n, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(self.n, self.rows.iter().map(|r| r.iter().fold(zero(), |s, &(j, v)| s + v * x[j])))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        SparseMatrix::from_triplets(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)])))
    }

    /// Dense copy of the principal submatrix on `range`.
    pub fn dense_block(&self, range: std::ops::Range<usize>) -> DMatrix<C64> {
        let d = range.len();
        let mut m = DMatrix::zeros(d, d);
        for i in range.clone() {
            for &(j, v) in &self.rows[i] {
                if range.contains(&j) {
                    m[(i - range.start, j - range.start)] = v;
                }
            }
        }
        m
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.triplets().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn product_matches_dense() {
        let a = SparseMatrix::from_triplets(
            3,
            [(0, 1, c(2.0)), (1, 2, C64::new(0.0, 1.0)), (2, 0, c(-1.0)), (0, 1, c(1.0))],
        );
        let b = SparseMatrix::from_triplets(3, [(1, 1, c(1.0)), (2, 0, c(4.0)), (0, 2, c(0.5))]);
        assert_eq!(a.get(0, 1), c(3.0));
        let dense = a.to_dense() * b.to_dense();
        assert_eq!(a.mul(&b).to_dense(), dense);
        assert_eq!(a.add(&b).to_dense(), a.to_dense() + b.to_dense());
        assert_eq!(a.adjoint().to_dense(), a.to_dense().adjoint());
        assert_eq!(a.sub(&a).nnz(), 0);
    }

    #[test]
    fn hermitian_defect() {
        let h = SparseMatrix::from_triplets(2, [(0, 1, C64::new(1.0, 2.0)), (1, 0, C64::new(1.0, -2.0))]);
        assert_eq!(h.hermiticity_defect(), 0.0);
        let x = DVector::from_vec(vec![c(1.0), c(1.0)]);
        assert_eq!(h.apply(&x)[0], C64::new(1.0, 2.0));
    }
}
