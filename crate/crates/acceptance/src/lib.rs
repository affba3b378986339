//! Slow, obviously-correct reference computations that the acceptance suite
//! checks the fast implementations against.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{concatenate, Array2, Axis};
use rand::Rng;
use sssnet::model::{init_model, ModelConfig, PreparedChannels, SimpaModel};
use sssnet::rng::seeded;
use sssnet::spectral::{baseline_matrix, BaselineMatrix, BaselineMethod};
use sssnet::train::{make_split, sample_triplets, Objective, SplitFractions, TrainConfig};
use sssnet::SignedGraph;

/// Random signed graph, weights in +-[0.2, 1.5). No self-loops.
pub fn random_graph(n: usize, density: f64, directed: bool, seed: u64) -> SignedGraph {
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        let start = if directed { 0 } else { i + 1 };
        for j in start..n {
            if i != j && rng.gen::<f64>() < density {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                edges.push((i, j, sign * rng.gen_range(0.2..1.5)));
            }
        }
    }
    SignedGraph::from_edges(n, &edges, directed).expect("valid random graph")
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
}

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

fn row_normalize(m: &Array2<f64>, tau: f64) -> Array2<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        out[[i, i]] += tau;
        let s: f64 = out.row(i).sum();
        if s > 0.0 {
            out.row_mut(i).mapv_inplace(|v| v / s);
        }
    }
    out
}

fn power(m: &Array2<f64>, k: usize) -> Array2<f64> {
    (0..k).fold(Array2::eye(m.nrows()), |acc, _| acc.dot(m))
}

/// Friend sum `sum_i w_i P^i H+` and enemy sum `sum w_ab P^a N P^b H-` over
/// `a + b < hop`, with `b` as the outer index of the weight list.
fn dense_direction(p: &Array2<f64>, nm: &Array2<f64>, h_pos: &Array2<f64>, h_neg: &Array2<f64>, hop: usize, friend: &[f64], enemy: &[f64]) -> [Array2<f64>; 2] {
    let mut zp = Array2::zeros(h_pos.raw_dim());
    for (i, w) in friend.iter().enumerate() {
        zp = zp + power(p, i).dot(h_pos) * *w;
    }
    let pairs = (0..hop).flat_map(|b| (0..hop - b).map(move |a| (a, b)));
    let mut zn = Array2::zeros(h_neg.raw_dim());
    for ((a, b), w) in pairs.zip(enemy) {
        zn = zn + power(p, a).dot(nm).dot(&power(p, b)).dot(h_neg) * *w;
    }
    [zp, zn]
}

/// Aggregated embedding from explicit dense matrix powers.
pub fn simpa_dense(g: &SignedGraph, hidden: &[Array2<f64>], m: &SimpaModel, tau_pos: f64, tau_neg: f64) -> Array2<f64> {
    let a = dense_adjacency(g);
    let pos = a.mapv(|v| v.max(0.0));
    let neg = a.mapv(|v| (-v).max(0.0));
    let o = &m.omega;
    let hop = m.config.hop;
    let mut blocks = Vec::from(dense_direction(
        &row_normalize(&pos, tau_pos),
        &row_normalize(&neg, tau_neg),
        &hidden[0],
        &hidden[1],
        hop,
        &o.sp,
        &o.sn,
    ));
    if m.config.directed {
        blocks.extend(dense_direction(
            &row_normalize(&pos.t().to_owned(), tau_pos),
            &row_normalize(&neg.t().to_owned(), tau_neg),
            &hidden[2],
            &hidden[3],
            hop,
            &o.tp,
            &o.tn,
        ));
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    concatenate(Axis(1), &views).expect("equal row counts")
}

/// Model with distinct aggregation weights, so a mismatched path order cannot
/// cancel out.
pub fn distinct_weight_model(d_in: usize, hidden: usize, hop: usize, directed: bool, seed: u64) -> SimpaModel {
    let cfg = ModelConfig {
        d_in,
        hidden,
        num_clusters: 3,
        hop,
        directed,
        balance: false,
    };
    let mut m = init_model(cfg, seed).expect("valid model config");
    let mut k = 0.0;
    for list in [&mut m.omega.sp, &mut m.omega.sn, &mut m.omega.tp, &mut m.omega.tn] {
        for w in list.iter_mut() {
            k += 1.0;
            *w = 0.3 + 0.17 * k;
        }
    }
    m
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Result of comparing reverse-mode gradients with central differences.
#[derive(Clone, Copy, Debug)]
pub struct GradientCheck {
    pub parameters: usize,
    /// `max |g - fd| / max(|g|, |fd|, floor)` over every parameter.
    pub worst_relative: f64,
}

/// Full objective on a random directed instance with `n` nodes and three
/// clusters, hop 2 and hidden width 8; every parameter is perturbed by `+-step`.
pub fn gradient_check(n: usize, seed: u64, step: f64, cfg: &TrainConfig) -> GradientCheck {
    let graph = random_graph(n, 0.15, true, seed);
    let x = random_matrix(n, 5, seed ^ 0xABCD);
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let model_cfg = ModelConfig {
        d_in: 5,
        hidden: 8,
        num_clusters: 3,
        hop: 2,
        directed: true,
        balance: false,
    };
    let model = init_model(model_cfg, seed).expect("valid model config");
    let ch = PreparedChannels::from_graph(&graph, cfg.tau_pos, cfg.tau_neg).expect("channels");
    let split = make_split(&labels, SplitFractions::default(), 0.5, &mut seeded(seed)).expect("split");
    let objective = Objective::new(&graph, &split, Some(&labels), cfg).expect("objective");
    let masks = model.sample_dropout(n, &mut seeded(seed + 1));
    let triplets = sample_triplets(&split.seeds, &labels, 40, &mut seeded(seed + 2));
    let (_, grad) = objective.loss_and_gradient(&model, &x, &ch, Some(&masks), &triplets).expect("gradient");
    let analytic: Vec<f64> = grad.tensors().concat();

    let loss_at = |m: &SimpaModel| -> f64 {
        let pass = m.forward(&x, &ch, Some(&masks)).expect("forward");
        objective.evaluate(&pass, &triplets).expect("loss").0.total
    };
    let mut probe = model.clone();
    let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut worst = 0.0f64;
    let mut flat = 0;
    for (t, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + step;
            let up = loss_at(&probe);
            probe.tensors_mut()[t][i] = orig - step;
            let down = loss_at(&probe);
            probe.tensors_mut()[t][i] = orig;
            let fd = (up - down) / (2.0 * step);
            let a = analytic[flat];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
            flat += 1;
        }
    }
    GradientCheck {
        parameters: flat,
        worst_relative: worst,
    }
}

/// `(unbalanced, total)` triangles by checking every triple of the symmetrized
/// sign pattern.
pub fn brute_triangles(g: &SignedGraph) -> (u64, u64) {
    let a = dense_adjacency(g);
    let n = g.n();
    let sym = |i: usize, j: usize| (a[[i, j]] + a[[j, i]]) / 2.0;
    let (mut unbalanced, mut total) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let e = [sym(i, j), sym(j, k), sym(i, k)];
                if e.iter().all(|&w| w != 0.0) {
                    total += 1;
                    if e.iter().filter(|&&w| w < 0.0).count() % 2 == 1 {
                        unbalanced += 1;
                    }
                }
            }
        }
    }
    (unbalanced, total)
}

/// Smallest eigenvalue of the signed Laplacian `D_abs - A` used by the `L`
/// baseline, from a dense symmetric eigendecomposition.
pub fn signed_laplacian_min_eigenvalue(g: &SignedGraph) -> f64 {
    let BaselineMatrix::Single(l) = baseline_matrix(g, BaselineMethod::Laplacian) else {
        unreachable!("the signed Laplacian is a single matrix")
    };
    let d = l.to_dense();
    let n = d.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| d[[i, j]]);
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// One-hot assignment matrix.
pub fn one_hot(labels: &[usize], k: usize) -> Array2<f64> {
    let mut p = Array2::zeros((labels.len(), k));
    for (i, &c) in labels.iter().enumerate() {
        p[[i, c]] = 1.0;
    }
    p
}
