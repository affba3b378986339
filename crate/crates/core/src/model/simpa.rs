//! Signed mixed-path aggregation.
//!
//! For one direction with propagation matrices `P` (positive) and `N`
//! (negative), the friend embedding is `sum_i w_i P^i H` for `i = 0..=h` and the
//! enemy embedding is `sum w_{a,b} P^a N P^b H` over `a + b <= h - 1`. Both are
//! evaluated by repeated sparse-times-dense products; no power of `P` or `N` is
//! ever formed.
//!
//! Enemy weights are ordered by `b` (the hops taken before the negative link)
//! and then by `a`: `(b=0, a=0..h-1), (b=1, a=0..h-2), ...`.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::graph::{NormalizedChannels, SignedGraph};
use crate::sparse::CsrMatrix;

/// Number of friend and enemy path matrices for `h` hops.
pub fn channel_counts(h: usize) -> (usize, usize) {
    (h + 1, h * (h + 1) / 2)
}

/// Propagation matrices of one direction together with their transposes.
#[derive(Clone, Debug)]
pub struct DirectionOps {
    pub pos: CsrMatrix,
    pub neg: CsrMatrix,
    pub pos_t: CsrMatrix,
    pub neg_t: CsrMatrix,
}

impl DirectionOps {
    pub fn new(pos: CsrMatrix, neg: CsrMatrix) -> Self {
        Self {
            pos_t: pos.transpose(),
            neg_t: neg.transpose(),
            pos,
            neg,
        }
    }

    pub fn n(&self) -> usize {
        self.pos.nrows()
    }
}

/// Normalized channels ready for aggregation. Undirected graphs keep only the
/// source direction.
#[derive(Clone, Debug)]
pub struct PreparedChannels {
    pub source: DirectionOps,
    pub target: Option<DirectionOps>,
}

impl PreparedChannels {
    pub fn new(ch: NormalizedChannels, directed: bool) -> Self {
        let target = directed.then(|| DirectionOps::new(ch.t_pos, ch.t_neg));
        Self {
            source: DirectionOps::new(ch.s_pos, ch.s_neg),
            target,
        }
    }

    pub fn from_graph(graph: &SignedGraph, tau_pos: f64, tau_neg: f64) -> Result<Self> {
        Ok(Self::new(graph.normalized_channels(tau_pos, tau_neg)?, graph.is_directed()))
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn directed(&self) -> bool {
        self.target.is_some()
    }
}

/// Buffer accounting for the aggregation step, in `f64` elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AggregationStats {
    pub largest_buffer: usize,
    pub total_allocated: usize,
    pub sparse_products: usize,
}

impl AggregationStats {
    fn record(&mut self, m: &Array2<f64>) {
        self.largest_buffer = self.largest_buffer.max(m.len());
        self.total_allocated += m.len();
        self.sparse_products += 1;
    }

    pub fn merge(&mut self, other: &AggregationStats) {
        self.largest_buffer = self.largest_buffer.max(other.largest_buffer);
        self.total_allocated += other.total_allocated;
        self.sparse_products += other.sparse_products;
    }
}

fn spmm(a: &CsrMatrix, x: &Array2<f64>, stats: &mut AggregationStats) -> Array2<f64> {
    let out = a.spmm(&x.view());
    stats.record(&out);
    out
}

pub(crate) fn frobenius_dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

/// Path terms retained for the backward pass.
#[derive(Clone, Debug)]
pub struct FriendTrace {
    /// `P^i H` for `i = 0..=h`.
    pub terms: Vec<Array2<f64>>,
    /// `N N H` when the balance term is active.
    pub balance: Option<Array2<f64>>,
}

#[derive(Clone, Debug)]
pub struct EnemyTrace {
    /// `P^a N P^b H` in weight order.
    pub terms: Vec<Array2<f64>>,
}

pub fn friend_forward(
    ops: &DirectionOps,
    h: &Array2<f64>,
    omega: &[f64],
    omega_balance: Option<f64>,
    stats: &mut AggregationStats,
) -> (Array2<f64>, FriendTrace) {
    let mut terms = Vec::with_capacity(omega.len());
    terms.push(h.clone());
    for _ in 1..omega.len() {
        let next = spmm(&ops.pos, terms.last().expect("nonempty"), stats);
        terms.push(next);
    }
    let mut z = Array2::zeros(h.dim());
    for (w, t) in omega.iter().zip(&terms) {
        z.scaled_add(*w, t);
    }
    let balance = omega_balance.map(|w| {
        let nh = spmm(&ops.neg, h, stats);
        let nnh = spmm(&ops.neg, &nh, stats);
        z.scaled_add(w, &nnh);
        nnh
    });
    (z, FriendTrace { terms, balance })
}

/// Returns `(dH, d omega, d omega_balance)`.
pub fn friend_backward(
    ops: &DirectionOps,
    trace: &FriendTrace,
    omega: &[f64],
    omega_balance: Option<f64>,
    dz: &Array2<f64>,
) -> (Array2<f64>, Vec<f64>, Option<f64>) {
    let d_omega: Vec<f64> = trace.terms.iter().map(|t| frobenius_dot(t, dz)).collect();
    let last = omega.len() - 1;
    let mut g = dz * omega[last];
    for i in (0..last).rev() {
        g = ops.pos_t.spmm(&g.view());
        g.scaled_add(omega[i], dz);
    }
    let d_balance = match (omega_balance, &trace.balance) {
        (Some(w), Some(nnh)) => {
            let back = ops.neg_t.spmm(&ops.neg_t.spmm(&dz.view()).view());
            g.scaled_add(w, &back);
            Some(frobenius_dot(nnh, dz))
        }
        _ => None,
    };
    (g, d_omega, d_balance)
}

pub fn enemy_forward(ops: &DirectionOps, h: &Array2<f64>, hop: usize, omega: &[f64], stats: &mut AggregationStats) -> (Array2<f64>, EnemyTrace) {
    let mut z = Array2::zeros(h.dim());
    let mut terms = Vec::with_capacity(omega.len());
    let mut pre = h.clone();
    for b in 0..hop {
        if b > 0 {
            pre = spmm(&ops.pos, &pre, stats);
        }
        let mut t = spmm(&ops.neg, &pre, stats);
        for a in 0..hop - b {
            if a > 0 {
                t = spmm(&ops.pos, &t, stats);
            }
            z.scaled_add(omega[terms.len()], &t);
            terms.push(t.clone());
        }
    }
    (z, EnemyTrace { terms })
}

/// Returns `(dH, d omega)`.
pub fn enemy_backward(ops: &DirectionOps, trace: &EnemyTrace, hop: usize, omega: &[f64], dz: &Array2<f64>) -> (Array2<f64>, Vec<f64>) {
    let d_omega: Vec<f64> = trace.terms.iter().map(|t| frobenius_dot(t, dz)).collect();
    if hop == 0 {
        return (Array2::zeros(dz.dim()), d_omega);
    }
    // d pre_b = N^T sum_a (P^T)^a w_{a,b} dZ for each b.
    let mut d_pre = Vec::with_capacity(hop);
    let mut offset = 0;
    for b in 0..hop {
        let count = hop - b;
        let ws = &omega[offset..offset + count];
        let mut g = dz * ws[count - 1];
        for a in (0..count - 1).rev() {
            g = ops.pos_t.spmm(&g.view());
            g.scaled_add(ws[a], dz);
        }
        d_pre.push(ops.neg_t.spmm(&g.view()));
        offset += count;
    }
    // pre_b = P^b H, so dH = sum_b (P^T)^b d pre_b.
    let mut e = d_pre.pop().expect("hop >= 1");
    while let Some(d) = d_pre.pop() {
        e = ops.pos_t.spmm(&e.view());
        e += &d;
    }
    (e, d_omega)
}

/// Weight lists for one direction.
#[derive(Clone, Copy, Debug)]
pub struct DirectionWeights<'a> {
    pub friend: &'a [f64],
    pub enemy: &'a [f64],
    pub balance: Option<f64>,
}

pub(crate) fn check_lengths(hop: usize, w: &DirectionWeights<'_>) -> Result<()> {
    let (f, e) = channel_counts(hop);
    if w.friend.len() != f || w.enemy.len() != e {
        return Err(Error::DimensionMismatch(format!(
            "hop {hop} needs {f} friend and {e} enemy weights, got {} and {}",
            w.friend.len(),
            w.enemy.len()
        )));
    }
    Ok(())
}

/// Friend and enemy embeddings `[Z+, Z-]` for one direction.
pub fn aggregate_direction(
    ops: &DirectionOps,
    h_pos: &Array2<f64>,
    h_neg: &Array2<f64>,
    hop: usize,
    w: &DirectionWeights<'_>,
    stats: &mut AggregationStats,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_lengths(hop, w)?;
    let n = ops.n();
    if h_pos.nrows() != n || h_neg.nrows() != n || h_pos.ncols() != h_neg.ncols() {
        return Err(Error::DimensionMismatch("hidden features must be n x d".into()));
    }
    let (zp, _) = friend_forward(ops, h_pos, w.friend, w.balance, stats);
    let (zn, _) = enemy_forward(ops, h_neg, hop, w.enemy, stats);
    Ok((zp, zn))
}
