//! Extreme eigenpairs of sparse symmetric matrices and symmetric-definite
//! pencils.
//!
//! Small problems go straight to a dense symmetric decomposition. Larger ones use
//! a restarted block Krylov (block Lanczos with full reorthogonalization)
//! iteration with explicit Rayleigh–Ritz projection; each restart begins from the
//! current best Ritz vectors. Pencils `A x = lambda B x` are reduced to standard
//! form with a Cholesky factor of `B`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::sparse::CsrMatrix;

/// Which end of the spectrum to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

/// `K` eigenpairs, values sorted ascending for [`Extreme::Smallest`] and descending
/// for [`Extreme::Largest`]; vectors are the matching columns.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
    /// Largest `||M v - lambda v||` over the returned pairs (reduced problem for pencils).
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_restarts: usize,
    /// Problems up to this size use the dense decomposition.
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_restarts: 300,
            dense_threshold: 500,
            seed: 0,
        }
    }
}

/// A symmetric linear operator applied to blocks of column vectors.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64>;

    fn to_dense(&self) -> Array2<f64> {
        self.apply(&Array2::eye(self.dim()).view())
    }
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        self.spmm(x)
    }

    fn to_dense(&self) -> Array2<f64> {
        CsrMatrix::to_dense(self)
    }
}

impl SymmetricOperator for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        self.dot(x)
    }

    fn to_dense(&self) -> Array2<f64> {
        self.clone()
    }
}

/// `L^{-1} A L^{-T}` for a Cholesky factor `L` of the pencil's right-hand matrix.
struct ReducedPencil<'a> {
    a: &'a CsrMatrix,
    l: DMatrix<f64>,
}

impl SymmetricOperator for ReducedPencil<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let u = self.l.tr_solve_lower_triangular(&to_na(x)).expect("nonsingular factor");
        let au = self.a.spmm(&from_na(&u).view());
        let w = self.l.solve_lower_triangular(&to_na(&au.view())).expect("nonsingular factor");
        from_na(&w)
    }
}

fn to_na(x: &ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// `K` extreme eigenpairs of a symmetric operator.
pub fn eig_extreme(op: &dyn SymmetricOperator, k: usize, end: Extreme, opts: &EigenOptions) -> Result<EigenResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {n}x{n} operator")));
    }
    if n <= opts.dense_threshold {
        return dense_extreme(op, k, end);
    }
    block_krylov(op, k, end, opts)
}

/// `K` extreme generalized eigenpairs of `A x = lambda B x` with `B` symmetric
/// positive definite after adding `1e-8` to its diagonal. Returned vectors are
/// `B`-orthonormal.
pub fn eig_extreme_pencil(a: &CsrMatrix, b: &CsrMatrix, k: usize, end: Extreme, opts: &EigenOptions) -> Result<EigenResult> {
    let n = a.nrows();
    if b.nrows() != n || a.ncols() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal size".into()));
    }
    let mut dense_b = to_na(&b.to_dense().view());
    for i in 0..n {
        dense_b[(i, i)] += 1e-8;
    }
    let chol = dense_b.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let reduced = ReducedPencil { a, l: chol.l() };
    let mut res = if n <= opts.dense_threshold {
        let dense_a = to_na(&a.to_dense().view());
        let x = reduced.l.solve_lower_triangular(&dense_a).expect("nonsingular factor");
        let c = reduced.l.solve_lower_triangular(&x.transpose()).expect("nonsingular factor");
        let c = from_na(&c);
        let c = (&c + &c.t()) * 0.5;
        dense_extreme(&c, k, end)?
    } else {
        block_krylov(&reduced, k, end, opts)?
    };
    let y = to_na(&res.vectors.view());
    let x = reduced.l.tr_solve_lower_triangular(&y).expect("nonsingular factor");
    res.vectors = from_na(&x);
    normalize_signs(&mut res.vectors);
    Ok(res)
}

fn dense_extreme(op: &dyn SymmetricOperator, k: usize, end: Extreme) -> Result<EigenResult> {
    let dense = op.to_dense();
    let sym = (&dense + &dense.t()) * 0.5;
    let eig = SymmetricEigen::new(to_na(&sym.view()));
    let order = extreme_order(eig.eigenvalues.as_slice(), end);
    let n = sym.nrows();
    let mut vectors = Array2::zeros((n, k));
    let mut values = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        values.push(eig.eigenvalues[idx]);
        for i in 0..n {
            vectors[[i, c]] = eig.eigenvectors[(i, idx)];
        }
    }
    normalize_signs(&mut vectors);
    let max_residual = residuals(&sym.dot(&vectors), &vectors, &values).into_iter().fold(0.0, f64::max);
    Ok(EigenResult {
        values,
        vectors,
        max_residual,
    })
}

fn extreme_order(values: &[f64], end: Extreme) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal);
        match end {
            Extreme::Smallest => ord,
            Extreme::Largest => ord.reverse(),
        }
        .then(a.cmp(&b))
    });
    order
}

/// Flips each column so its largest-magnitude entry is positive.
fn normalize_signs(v: &mut Array2<f64>) {
    for mut col in v.axis_iter_mut(Axis(1)) {
        let mut best = 0.0f64;
        for &x in col.iter() {
            if x.abs() > best.abs() + 1e-12 {
                best = x;
            }
        }
        if best < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
}

fn residuals(av: &Array2<f64>, v: &Array2<f64>, values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|c| {
            let r = &av.column(c) - &(&v.column(c) * values[c]);
            r.dot(&r).sqrt() / v.column(c).dot(&v.column(c)).sqrt().max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// Orthonormalizes the columns of `block` against `basis` and each other
/// (two passes of classical Gram–Schmidt). Columns that collapse are replaced by
/// random directions.
fn orthonormalize(block: &mut Array2<f64>, basis: &ArrayView2<f64>, rng: &mut impl Rng) {
    let n = block.nrows();
    for c in 0..block.ncols() {
        let mut attempts = 0;
        loop {
            let original = block.column(c).dot(&block.column(c)).sqrt();
            for _ in 0..2 {
                if basis.ncols() > 0 {
                    let coeff = basis.t().dot(&block.column(c));
                    let proj = basis.dot(&coeff);
                    let mut col = block.column_mut(c);
                    col -= &proj;
                }
                for prev in 0..c {
                    let (done, mut rest) = block.view_mut().split_at(Axis(1), c);
                    let p = done.column(prev);
                    let mut col = rest.column_mut(0);
                    let d = p.dot(&col);
                    col.scaled_add(-d, &p);
                }
            }
            let norm = block.column(c).dot(&block.column(c)).sqrt();
            if norm > 1e-10 * original.max(1e-300) && norm > 1e-200 {
                block.column_mut(c).mapv_inplace(|x| x / norm);
                break;
            }
            attempts += 1;
            assert!(attempts < 50, "could not extend Krylov basis");
            for i in 0..n {
                block[[i, c]] = rng.gen::<f64>() - 0.5;
            }
        }
    }
}

fn block_krylov(op: &dyn SymmetricOperator, k: usize, end: Extreme, opts: &EigenOptions) -> Result<EigenResult> {
    let n = op.dim();
    let mut rng = seeded(opts.seed);
    let block_size = (k + k.min(8)).min(n);
    let max_basis = (20 * block_size).max(100).min(n);

    let mut start = Array2::from_shape_fn((n, block_size), |_| rng.gen::<f64>() - 0.5);
    let mut worst = f64::INFINITY;
    for _restart in 0..opts.max_restarts {
        let mut q = Array2::<f64>::zeros((n, max_basis));
        let mut aq = Array2::<f64>::zeros((n, max_basis));
        let mut filled = 0;
        let mut block = start.clone();
        while filled < max_basis {
            let width = block.ncols().min(max_basis - filled);
            let mut blk = block.slice(s![.., ..width]).to_owned();
            orthonormalize(&mut blk, &q.slice(s![.., ..filled]), &mut rng);
            let ablk = op.apply(&blk.view());
            q.slice_mut(s![.., filled..filled + width]).assign(&blk);
            aq.slice_mut(s![.., filled..filled + width]).assign(&ablk);
            filled += width;
            block = ablk;
        }
        let t = q.t().dot(&aq);
        let t = (&t + &t.t()) * 0.5;
        let eig = SymmetricEigen::new(to_na(&t.view()));
        let order = extreme_order(eig.eigenvalues.as_slice(), end);
        let ritz_coeff = Array2::from_shape_fn((max_basis, block_size), |(i, c)| eig.eigenvectors[(i, order[c])]);
        let values: Vec<f64> = order.iter().take(block_size).map(|&i| eig.eigenvalues[i]).collect();
        let x = q.dot(&ritz_coeff);
        let ax = aq.dot(&ritz_coeff);
        let res = residuals(&ax, &x, &values);
        worst = res.iter().take(k).copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            let mut vectors = x.slice(s![.., ..k]).to_owned();
            normalize_signs(&mut vectors);
            return Ok(EigenResult {
                values: values[..k].to_vec(),
                vectors,
                max_residual: worst,
            });
        }
        if max_basis == n {
            // The basis spans the whole space; the projection is exact up to rounding.
            break;
        }
        start = x;
    }
    Err(Error::NoConvergence {
        residual: worst,
        iterations: opts.max_restarts,
    })
}
