//! The nine spectral clustering baselines.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::eigen::{eig_extreme, eig_extreme_pencil, EigenOptions, Extreme};
use super::kmeans::{kmeans, KMeansOptions};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::sparse::CsrMatrix;

/// Regularizer for zero degrees under normalized constructions.
pub const DEGREE_FLOOR: f64 = 1e-8;
/// SPONGE balance parameters.
pub const SPONGE_TAU_POS: f64 = 1.0;
pub const SPONGE_TAU_NEG: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    #[serde(rename = "A")]
    Adjacency,
    #[serde(rename = "sns")]
    Sns,
    #[serde(rename = "dns")]
    Dns,
    #[serde(rename = "L")]
    Laplacian,
    #[serde(rename = "L_sym")]
    LaplacianSym,
    #[serde(rename = "BNC")]
    Bnc,
    #[serde(rename = "BRC")]
    Brc,
    #[serde(rename = "SPONGE")]
    Sponge,
    #[serde(rename = "SPONGE_sym")]
    SpongeSym,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 9] = [
        BaselineMethod::Adjacency,
        BaselineMethod::Sns,
        BaselineMethod::Dns,
        BaselineMethod::Laplacian,
        BaselineMethod::LaplacianSym,
        BaselineMethod::Bnc,
        BaselineMethod::Brc,
        BaselineMethod::Sponge,
        BaselineMethod::SpongeSym,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            BaselineMethod::Adjacency => "A",
            BaselineMethod::Sns => "sns",
            BaselineMethod::Dns => "dns",
            BaselineMethod::Laplacian => "L",
            BaselineMethod::LaplacianSym => "L_sym",
            BaselineMethod::Bnc => "BNC",
            BaselineMethod::Brc => "BRC",
            BaselineMethod::Sponge => "SPONGE",
            BaselineMethod::SpongeSym => "SPONGE_sym",
        }
    }

    pub fn end(self) -> Extreme {
        match self {
            BaselineMethod::Adjacency => Extreme::Largest,
            _ => Extreme::Smallest,
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown baseline method {s:?}")))
    }
}

/// A baseline's matrix as written: a single matrix or a pencil `(lhs, rhs)` for
/// `lhs x = lambda rhs x`. `sns` and `dns` are not symmetric in this form.
#[derive(Clone, Debug)]
pub enum BaselineMatrix {
    Single(CsrMatrix),
    Pencil { lhs: CsrMatrix, rhs: CsrMatrix },
}

/// The symmetric problem actually handed to the eigensolver.
#[derive(Clone, Debug)]
pub struct BaselineProblem {
    pub method: BaselineMethod,
    pub matrix: BaselineMatrix,
    pub end: Extreme,
    /// Diagonal map from eigenvectors of `matrix` to eigenvectors of the literal
    /// (possibly non-symmetric) baseline matrix.
    pub back_scale: Option<Vec<f64>>,
}

struct Parts {
    a: CsrMatrix,
    pos: CsrMatrix,
    neg: CsrMatrix,
    d_pos: Vec<f64>,
    d_neg: Vec<f64>,
    d_abs: Vec<f64>,
}

fn parts(graph: &SignedGraph) -> Parts {
    let sym = graph.symmetrize();
    let dec = sym.decompose();
    let deg = sym.degrees();
    Parts {
        a: sym.adjacency().clone(),
        pos: dec.pos,
        neg: dec.neg,
        d_pos: deg.pos,
        d_neg: deg.neg,
        d_abs: deg.abs,
    }
}

fn floored(d: &[f64]) -> Vec<f64> {
    d.iter().map(|&x| if x > 0.0 { x } else { DEGREE_FLOOR }).collect()
}

fn inv_sqrt(d: &[f64]) -> Vec<f64> {
    floored(d).iter().map(|x| 1.0 / x.sqrt()).collect()
}

fn diag_minus(d: &[f64], m: &CsrMatrix) -> CsrMatrix {
    CsrMatrix::from_diagonal(d).add_scaled(1.0, m, -1.0)
}

/// `I - D^{-1/2} M D^{-1/2}`.
fn normalized_laplacian(m: &CsrMatrix, d: &[f64]) -> CsrMatrix {
    let s = inv_sqrt(d);
    CsrMatrix::identity(m.nrows()).add_scaled(1.0, &m.scale(&s, &s), -1.0)
}

/// The baseline matrix exactly as defined, computed on `(A + A^T) / 2`.
pub fn baseline_matrix(graph: &SignedGraph, method: BaselineMethod) -> BaselineMatrix {
    let p = parts(graph);
    match method {
        BaselineMethod::Sns => {
            let inv: Vec<f64> = floored(&p.d_abs).iter().map(|x| 1.0 / x).collect();
            let ones = vec![1.0; p.a.nrows()];
            let inner = CsrMatrix::from_diagonal(&p.d_pos).add_scaled(1.0, &p.a.scale(&p.d_neg, &ones), -1.0);
            BaselineMatrix::Single(inner.scale(&inv, &ones))
        }
        BaselineMethod::Dns => {
            let inv: Vec<f64> = floored(&p.d_abs).iter().map(|x| 1.0 / x).collect();
            let ones = vec![1.0; p.a.nrows()];
            BaselineMatrix::Single(diag_minus(&p.d_pos, &p.a).scale(&inv, &ones))
        }
        _ => baseline_problem(graph, method).matrix,
    }
}

/// Symmetric eigenproblem whose solutions give the baseline's embedding.
///
/// `dns` is solved through its symmetric similar form `BNC` and back-scaled by
/// `D^{-1/2}`; `sns` through `E - S^{1/2} A S^{1/2}` with `E = D^{-1} D+` and
/// `S = D^{-1} D-`, back-scaled by `S^{1/2}`.
pub fn baseline_problem(graph: &SignedGraph, method: BaselineMethod) -> BaselineProblem {
    let p = parts(graph);
    let n = p.a.nrows();
    let mut back_scale = None;
    let matrix = match method {
        BaselineMethod::Adjacency => BaselineMatrix::Single(p.a),
        BaselineMethod::Laplacian => BaselineMatrix::Single(diag_minus(&p.d_abs, &p.a)),
        BaselineMethod::LaplacianSym => {
            let s = inv_sqrt(&p.d_abs);
            BaselineMatrix::Single(diag_minus(&p.d_abs, &p.a).scale(&s, &s))
        }
        BaselineMethod::Brc => BaselineMatrix::Single(diag_minus(&p.d_pos, &p.a)),
        BaselineMethod::Bnc | BaselineMethod::Dns => {
            let s = inv_sqrt(&p.d_abs);
            if method == BaselineMethod::Dns {
                back_scale = Some(s.clone());
            }
            BaselineMatrix::Single(diag_minus(&p.d_pos, &p.a).scale(&s, &s))
        }
        BaselineMethod::Sns => {
            let dbar = floored(&p.d_abs);
            let e: Vec<f64> = p.d_pos.iter().zip(&dbar).map(|(a, b)| a / b).collect();
            let root_s: Vec<f64> = p.d_neg.iter().zip(&dbar).map(|(a, b)| (a / b).sqrt()).collect();
            back_scale = Some(root_s.clone());
            BaselineMatrix::Single(diag_minus(&e, &p.a.scale(&root_s, &root_s)))
        }
        BaselineMethod::Sponge => {
            let lap_pos = diag_minus(&p.d_pos, &p.pos);
            let lap_neg = diag_minus(&p.d_neg, &p.neg);
            BaselineMatrix::Pencil {
                lhs: lap_pos.add_scaled(1.0, &CsrMatrix::from_diagonal(&p.d_neg), SPONGE_TAU_NEG),
                rhs: lap_neg.add_scaled(1.0, &CsrMatrix::from_diagonal(&p.d_pos), SPONGE_TAU_POS),
            }
        }
        BaselineMethod::SpongeSym => {
            let id = CsrMatrix::identity(n);
            BaselineMatrix::Pencil {
                lhs: normalized_laplacian(&p.pos, &p.d_pos).add_scaled(1.0, &id, SPONGE_TAU_NEG),
                rhs: normalized_laplacian(&p.neg, &p.d_neg).add_scaled(1.0, &id, SPONGE_TAU_POS),
            }
        }
    };
    BaselineProblem {
        method,
        matrix,
        end: method.end(),
        back_scale,
    }
}

/// `n x K` spectral embedding for a baseline.
pub fn baseline_embedding(graph: &SignedGraph, k: usize, method: BaselineMethod, seed: u64) -> Result<Array2<f64>> {
    let problem = baseline_problem(graph, method);
    let opts = EigenOptions { seed, ..Default::default() };
    let mut vectors = match &problem.matrix {
        BaselineMatrix::Single(m) => eig_extreme(m, k, problem.end, &opts)?.vectors,
        BaselineMatrix::Pencil { lhs, rhs } => eig_extreme_pencil(lhs, rhs, k, problem.end, &opts)?.vectors,
    };
    if let Some(scale) = &problem.back_scale {
        for (mut row, &s) in vectors.rows_mut().into_iter().zip(scale) {
            row *= s;
        }
    }
    Ok(vectors)
}

/// Baseline cluster labels: spectral embedding followed by k-means.
pub fn baseline_cluster(graph: &SignedGraph, k: usize, method: BaselineMethod, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let embedding = baseline_embedding(graph, k, method, rng.gen())?;
    Ok(kmeans(&embedding.view(), k, &KMeansOptions::default(), rng)?.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ari;
    use crate::rng::seeded;
    use ndarray::array;

    fn assert_close(a: &Array2<f64>, b: &Array2<f64>, eps: f64) {
        assert_eq!(a.dim(), b.dim());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= eps, "{a} vs {b}");
        }
    }

    // Pbnc hand example: 0-1 (+1), 2-3 (+1), 1-2 (-1).
    fn hand_graph() -> SignedGraph {
        SignedGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0), (1, 2, -1.0)], false).unwrap()
    }

    fn single(m: BaselineMatrix) -> Array2<f64> {
        match m {
            BaselineMatrix::Single(m) => m.to_dense(),
            BaselineMatrix::Pencil { .. } => panic!("expected single matrix"),
        }
    }

    #[test]
    fn hand_matrices() {
        let g = hand_graph();
        // Degrees: d+ = [1,1,1,1], d- = [0,1,1,0], dbar = [1,2,2,1].
        let a = array![[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, -1.0, 0.0], [0.0, -1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
        assert_eq!(single(baseline_matrix(&g, BaselineMethod::Adjacency)), a);
        let lap = array![[1.0, -1.0, 0.0, 0.0], [-1.0, 2.0, 1.0, 0.0], [0.0, 1.0, 2.0, -1.0], [0.0, 0.0, -1.0, 1.0]];
        assert_eq!(single(baseline_matrix(&g, BaselineMethod::Laplacian)), lap);
        let brc = array![[1.0, -1.0, 0.0, 0.0], [-1.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, -1.0], [0.0, 0.0, -1.0, 1.0]];
        assert_eq!(single(baseline_matrix(&g, BaselineMethod::Brc)), brc);
        let r = 1.0 / 2f64.sqrt();
        let lsym = array![[1.0, -r, 0.0, 0.0], [-r, 1.0, 0.5, 0.0], [0.0, 0.5, 1.0, -r], [0.0, 0.0, -r, 1.0]];
        assert_close(&single(baseline_matrix(&g, BaselineMethod::LaplacianSym)), &lsym, 1e-15);
        let bnc = array![[1.0, -r, 0.0, 0.0], [-r, 0.5, 0.5, 0.0], [0.0, 0.5, 0.5, -r], [0.0, 0.0, -r, 1.0]];
        assert_close(&single(baseline_matrix(&g, BaselineMethod::Bnc)), &bnc, 1e-15);
        let dns = array![[1.0, -1.0, 0.0, 0.0], [-0.5, 0.5, 0.5, 0.0], [0.0, 0.5, 0.5, -0.5], [0.0, 0.0, -1.0, 1.0]];
        assert_close(&single(baseline_matrix(&g, BaselineMethod::Dns)), &dns, 1e-15);
        // D-A for node 1: row [-1, 0, 1, 0] scaled by d-=1; nodes 0,3 have d-=0.
        let sns = array![[1.0, 0.0, 0.0, 0.0], [-0.5, 0.5, 0.5, 0.0], [0.0, 0.5, 0.5, -0.5], [0.0, 0.0, 0.0, 1.0]];
        assert_close(&single(baseline_matrix(&g, BaselineMethod::Sns)), &sns, 1e-15);

        match baseline_matrix(&g, BaselineMethod::Sponge) {
            BaselineMatrix::Pencil { lhs, rhs } => {
                let lhs_expected = array![[1.0, -1.0, 0.0, 0.0], [-1.0, 2.0, 0.0, 0.0], [0.0, 0.0, 2.0, -1.0], [0.0, 0.0, -1.0, 1.0]];
                let rhs_expected = array![[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, -1.0, 0.0], [0.0, -1.0, 2.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
                assert_eq!(lhs.to_dense(), lhs_expected);
                assert_eq!(rhs.to_dense(), rhs_expected);
            }
            BaselineMatrix::Single(_) => panic!("SPONGE is a pencil"),
        }
    }

    #[test]
    fn symmetric_solve_forms_are_symmetric() {
        let g = crate::synth::sample_ssbm(&crate::synth::SsbmParams { n: 120, k: 3, p: 0.1, rho: 1.5, eta: 0.1, seed: 4 })
            .unwrap()
            .graph;
        for m in BaselineMethod::ALL {
            match baseline_problem(&g, m).matrix {
                BaselineMatrix::Single(x) => assert!(x.is_symmetric(1e-12), "{m}"),
                BaselineMatrix::Pencil { lhs, rhs } => {
                    assert!(lhs.is_symmetric(1e-12) && rhs.is_symmetric(1e-12), "{m}")
                }
            }
        }
    }

    #[test]
    fn back_scaled_vectors_solve_literal_matrix() {
        let g = crate::synth::sample_ssbm(&crate::synth::SsbmParams { n: 90, k: 3, p: 0.15, rho: 1.0, eta: 0.1, seed: 8 })
            .unwrap()
            .graph;
        for m in [BaselineMethod::Dns, BaselineMethod::Sns] {
            let literal = single(baseline_matrix(&g, m));
            let problem = baseline_problem(&g, m);
            let BaselineMatrix::Single(sym) = &problem.matrix else { panic!() };
            let r = eig_extreme(sym, 3, Extreme::Smallest, &EigenOptions::default()).unwrap();
            let scale = problem.back_scale.unwrap();
            for c in 0..3 {
                let x: ndarray::Array1<f64> = r.vectors.column(c).iter().zip(&scale).map(|(v, s)| v * s).collect();
                let res = literal.dot(&x) - &x * r.values[c];
                assert!(res.dot(&res).sqrt() < 1e-8 * x.dot(&x).sqrt().max(1.0), "{m}");
            }
        }
    }

    #[test]
    fn positive_graph_laplacian_is_combinatorial() {
        let g = SignedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)], false).unwrap();
        let lap = single(baseline_matrix(&g, BaselineMethod::Laplacian));
        assert_eq!(lap, array![[1.0, -1.0, 0.0], [-1.0, 3.0, -2.0], [0.0, -2.0, 2.0]]);
    }

    #[test]
    fn balanced_two_block_has_indicator_null_vector() {
        let mut edges = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                edges.push((i, j, if (i < 3) == (j < 3) { 1.0 } else { -1.0 }));
            }
        }
        let g = SignedGraph::from_edges(6, &edges, false).unwrap();
        let lap = single(baseline_matrix(&g, BaselineMethod::Laplacian));
        let x = array![1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        assert!(lap.dot(&x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn tags_round_trip() {
        for m in BaselineMethod::ALL {
            assert_eq!(m.tag().parse::<BaselineMethod>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.tag()));
        }
        assert!("sponge".parse::<BaselineMethod>().is_err());
    }

    #[test]
    fn disconnected_cliques_under_l() {
        let mut edges = Vec::new();
        for c in 0..2 {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((c * 5 + i, c * 5 + j, 1.0));
                }
            }
        }
        let g = SignedGraph::from_edges(10, &edges, false).unwrap();
        let labels = baseline_cluster(&g, 2, BaselineMethod::Laplacian, &mut seeded(1)).unwrap();
        assert_eq!(ari(&labels, &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let g = crate::synth::sample_ssbm(&crate::synth::SsbmParams { n: 150, k: 3, p: 0.1, rho: 1.0, eta: 0.2, seed: 2 })
            .unwrap()
            .graph;
        for m in BaselineMethod::ALL {
            let a = baseline_cluster(&g, 3, m, &mut seeded(9)).unwrap();
            let b = baseline_cluster(&g, 3, m, &mut seeded(9)).unwrap();
            assert_eq!(a, b, "{m}");
        }
    }
}
