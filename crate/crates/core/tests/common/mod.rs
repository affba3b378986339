#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use sssnet::rng::seeded;
use sssnet::SignedGraph;

/// Random signed graph with weights in +-[0.2, 1.5). Self-loops allowed.
pub fn random_graph(n: usize, density: f64, directed: bool, seed: u64) -> SignedGraph {
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        let start = if directed { 0 } else { i };
        for j in start..n {
            if rng.gen::<f64>() < density {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                edges.push((i, j, sign * rng.gen_range(0.2..1.5)));
            }
        }
    }
    SignedGraph::from_edges(n, &edges, directed).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
}

/// Dense adjacency straight from the edge list.
pub fn dense_adjacency(g: &SignedGraph) -> Array2<f64> {
    let mut a = Array2::zeros((g.n(), g.n()));
    for (i, j, w) in g.edges() {
        a[[i, j]] = w;
        if !g.is_directed() {
            a[[j, i]] = w;
        }
    }
    a
}

/// `(M + tau I)` with rows scaled to sum to one; zero rows stay zero.
pub fn dense_row_normalize(m: &Array2<f64>, tau: f64) -> Array2<f64> {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        out[[i, i]] += tau;
        let s: f64 = out.row(i).sum();
        if s > 0.0 {
            out.row_mut(i).mapv_inplace(|v| v / s);
        }
    }
    out
}

/// Positive and negative propagation matrices `(P_s, N_s, P_t, N_t)`.
pub fn dense_channels(g: &SignedGraph, tau_pos: f64, tau_neg: f64) -> [Array2<f64>; 4] {
    let a = dense_adjacency(g);
    let pos = a.mapv(|v| v.max(0.0));
    let neg = a.mapv(|v| (-v).max(0.0));
    [
        dense_row_normalize(&pos, tau_pos),
        dense_row_normalize(&neg, tau_neg),
        dense_row_normalize(&pos.t().to_owned(), tau_pos),
        dense_row_normalize(&neg.t().to_owned(), tau_neg),
    ]
}

pub fn matrix_power(m: &Array2<f64>, k: usize) -> Array2<f64> {
    let mut out = Array2::eye(m.nrows());
    for _ in 0..k {
        out = out.dot(m);
    }
    out
}

/// Enemy path pairs `(a, b)` for `P^a N P^b`, in the weight order used by the
/// model: `b` outer, `a` inner.
pub fn enemy_pairs(h: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 0..h {
        for a in 0..h - b {
            out.push((a, b));
        }
    }
    out
}

/// Friend and enemy embeddings of one direction, built from explicit matrix
/// powers.
pub fn dense_direction(
    p: &Array2<f64>,
    nm: &Array2<f64>,
    h_pos: &Array2<f64>,
    h_neg: &Array2<f64>,
    hop: usize,
    friend: &[f64],
    enemy: &[f64],
) -> (Array2<f64>, Array2<f64>) {
    let mut zp = Array2::zeros(h_pos.raw_dim());
    for (i, w) in friend.iter().enumerate() {
        zp = zp + matrix_power(p, i).dot(h_pos) * *w;
    }
    let mut zn = Array2::zeros(h_neg.raw_dim());
    for ((a, b), w) in enemy_pairs(hop).into_iter().zip(enemy) {
        let m = matrix_power(p, a).dot(nm).dot(&matrix_power(p, b));
        zn = zn + m.dot(h_neg) * *w;
    }
    (zp, zn)
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
