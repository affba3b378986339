//! Compressed sparse row matrices and the sparse-times-dense products used by
//! aggregation, losses and the iterative eigensolver.

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use serde::{Deserialize, Serialize};

/// Real CSR matrix. Column indices within each row are strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut triplets = Vec::with_capacity(n);
        for (i, &v) in diag.iter().enumerate() {
            if v != 0.0 {
                triplets.push((i, i, v));
            }
        }
        Self::from_triplets(n, n, triplets)
    }

    /// Builds a matrix from `(row, col, value)` triplets. Repeated coordinates are
    /// summed and exact zeros are dropped from the stored support.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows: Vec<usize> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let mut out_idx = Vec::with_capacity(indices.len());
        let mut out_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != 0.0 {
                indptr[r + 1] += 1;
                out_idx.push(c);
                out_val.push(v);
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices: out_idx,
            values: out_val,
        }
    }

    pub fn from_dense(dense: &ArrayView2<f64>) -> Self {
        let mut triplets = Vec::new();
        for ((i, j), &v) in dense.indexed_iter() {
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
        Self::from_triplets(dense.nrows(), dense.ncols(), triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates the stored `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&j) {
            Ok(pos) => self.values[a + pos],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    /// Applies `f` to every stored value, dropping entries that map to zero.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let triplets = self.triplets().map(|(i, j, v)| (i, j, f(v))).collect();
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Entrywise linear combination `alpha * self + beta * other`.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut triplets: Vec<_> = self.triplets().map(|(i, j, v)| (i, j, alpha * v)).collect();
        triplets.extend(other.triplets().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out.values[k] *= left[i] * right[self.indices[k]];
            }
        }
        out.prune()
    }

    fn prune(self) -> Self {
        if self.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let triplets = self.triplets().collect();
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        if t.indptr != self.indptr || t.indices != self.indices {
            return self.triplets().all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol)
                && t.triplets().all(|(i, j, v)| (v - self.get(i, j)).abs() <= tol);
        }
        self.values.iter().zip(&t.values).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    /// Sparse times dense: returns `self * x`.
    pub fn spmm(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, x.ncols()));
        self.spmm_into(x, &mut out.view_mut());
        out
    }

    /// Writes `self * x` into `out`, overwriting it.
    pub fn spmm_into(&self, x: &ArrayView2<f64>, out: &mut ArrayViewMut2<f64>) {
        assert_eq!(x.nrows(), self.ncols, "spmm inner dimension");
        assert_eq!(out.dim(), (self.nrows, x.ncols()), "spmm output shape");
        out.fill(0.0);
        for i in 0..self.nrows {
            let mut orow = out.row_mut(i);
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.values[k];
                orow.scaled_add(v, &x.row(self.indices[k]));
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.triplets() {
            out[[i, j]] = v;
        }
        out
    }

    /// Restriction to the rows and columns listed in `nodes` (in that order).
    pub fn submatrix(&self, nodes: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (new, &old) in nodes.iter().enumerate() {
            pos[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in nodes.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if pos[j] != usize::MAX {
                    triplets.push((new_i, pos[j], v));
                }
            }
        }
        Self::from_triplets(nodes.len(), nodes.len(), triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn spmm_matches_dense() {
        let d = array![[0.0, 2.0, 0.0], [1.0, 0.0, -3.0], [0.0, 0.0, 4.0]];
        let m = CsrMatrix::from_dense(&d.view());
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(m.spmm(&x.view()), d.dot(&x));
        assert_eq!(m.transpose().to_dense(), d.t().to_owned());
    }

    #[test]
    fn submatrix_keeps_order() {
        let d = array![[0.0, 1.0, 2.0], [3.0, 0.0, 4.0], [5.0, 6.0, 0.0]];
        let m = CsrMatrix::from_dense(&d.view());
        let s = m.submatrix(&[2, 0]);
        assert_eq!(s.to_dense(), array![[0.0, 5.0], [2.0, 0.0]]);
    }
}
