//! Loss functions with their gradients.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::sparse::CsrMatrix;

/// Probabilities below this are clamped inside the logarithm.
pub const CE_CLAMP: f64 = 1e-12;
const STOCHASTIC_TOL: f64 = 1e-6;

/// Induced subgraph data for the probabilistic balanced normalized cut.
/// Directed graphs are symmetrized first; degrees are those of the subgraph.
#[derive(Clone, Debug)]
pub struct PbncTarget {
    nodes: Vec<usize>,
    adj: CsrMatrix,
    d_pos: Vec<f64>,
    d_abs: Vec<f64>,
}

impl PbncTarget {
    pub fn new(graph: &SignedGraph, nodes: &[usize]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("PBNC needs a nonempty node subset".into()));
        }
        if let Some(&bad) = nodes.iter().find(|&&v| v >= graph.n()) {
            return Err(Error::NodeOutOfRange { id: bad, n: graph.n() });
        }
        let base = if graph.is_directed() { graph.symmetrize() } else { graph.clone() };
        let adj = base.adjacency().submatrix(nodes);
        let mut d_pos = vec![0.0; nodes.len()];
        let mut d_abs = vec![0.0; nodes.len()];
        for (i, _, v) in adj.triplets() {
            d_pos[i] += v.max(0.0);
            d_abs[i] += v.abs();
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            adj,
            d_pos,
            d_abs,
        })
    }

    pub fn all_nodes(graph: &SignedGraph) -> Result<Self> {
        Self::new(graph, &(0..graph.n()).collect::<Vec<_>>())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Loss and `dL/dP` (zero outside the subset).
    pub fn value_and_grad(&self, p: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        check_stochastic(p)?;
        let k = p.ncols();
        let m = self.nodes.len();
        let sub = Array2::from_shape_fn((m, k), |(i, c)| p[[self.nodes[i], c]]);
        let ap = self.adj.spmm(&sub.view());
        let mut grad = Array2::zeros(p.dim());
        let mut loss = 0.0;
        for c in 0..k {
            let col = sub.column(c);
            let acol = ap.column(c);
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..m {
                num += self.d_pos[i] * col[i] * col[i] - col[i] * acol[i];
                den += self.d_abs[i] * col[i] * col[i];
            }
            if den <= 0.0 {
                continue;
            }
            loss += num / den;
            for i in 0..m {
                let d_num = 2.0 * (self.d_pos[i] * col[i] - acol[i]);
                let d_den = 2.0 * self.d_abs[i] * col[i];
                grad[[self.nodes[i], c]] = (d_num * den - num * d_den) / (den * den);
            }
        }
        Ok((loss, grad))
    }
}

fn check_stochastic(p: &Array2<f64>) -> Result<()> {
    for (row, r) in p.rows().into_iter().enumerate() {
        let sum = r.sum();
        if !(sum - 1.0).abs().le(&STOCHASTIC_TOL) || r.iter().any(|&v| v < -STOCHASTIC_TOL || !v.is_finite()) {
            return Err(Error::NotStochastic { row, sum });
        }
    }
    Ok(())
}

/// Probabilistic balanced normalized cut of `P` on the subgraph induced by `nodes`.
pub fn pbnc_loss(p: &Array2<f64>, graph: &SignedGraph, nodes: &[usize]) -> Result<f64> {
    Ok(PbncTarget::new(graph, nodes)?.value_and_grad(p)?.0)
}

/// Mean negative log-likelihood of the seed labels, with its gradient.
pub fn ce_loss_and_grad(p: &Array2<f64>, seeds: &[usize], labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    let m = seeds.len() as f64;
    let mut grad = Array2::zeros(p.dim());
    let mut loss = 0.0;
    for &i in seeds {
        let y = labels[i];
        if y >= p.ncols() {
            return Err(Error::InvalidParameter(format!("label {y} of node {i} exceeds cluster count {}", p.ncols())));
        }
        let q = p[[i, y]];
        if q > CE_CLAMP {
            loss -= q.ln();
            grad[[i, y]] = -1.0 / (m * q);
        } else {
            loss -= CE_CLAMP.ln();
        }
    }
    Ok((loss / m, grad))
}

pub fn ce_loss(p: &Array2<f64>, seeds: &[usize], labels: &[usize]) -> Result<f64> {
    Ok(ce_loss_and_grad(p, seeds, labels)?.0)
}

/// `(anchor, positive, negative)`: the positive shares the anchor's cluster.
pub type Triplet = (usize, usize, usize);

fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Cosine similarity, `0` when either vector is zero.
pub fn cosine(u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        u.dot(&v) / (nu * nv)
    }
}

/// Adds `scale * d cos(u, v) / d u` to `out_u` and the `v` part to `out_v`.
fn cosine_grad(u: ArrayView1<f64>, v: ArrayView1<f64>, scale: f64, grad: &mut Array2<f64>, iu: usize, iv: usize) {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return;
    }
    let c = u.dot(&v) / (nu * nv);
    let du = (&v / (nu * nv) - &u * (c / (nu * nu))) * scale;
    let dv = (&u / (nu * nv) - &v * (c / (nv * nv))) * scale;
    let mut row_u = grad.row_mut(iu);
    row_u += &du;
    let mut row_v = grad.row_mut(iv);
    row_v += &dv;
}

/// Triplet loss value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripletValue {
    pub loss: f64,
    /// False when there were no triplets and the term is absent.
    pub active: bool,
}

/// Mean hinge over triplets. The default form is
/// `relu(cos(z_i, z_neg) - cos(z_i, z_pos) + alpha)`; `literal` swaps the two
/// similarities.
pub fn triplet_loss_and_grad(z: &Array2<f64>, triplets: &[Triplet], alpha: f64, literal: bool) -> (TripletValue, Array2<f64>) {
    let mut grad = Array2::zeros(z.dim());
    if triplets.is_empty() {
        return (TripletValue { loss: 0.0, active: false }, grad);
    }
    let t = triplets.len() as f64;
    let mut loss = 0.0;
    for &(i, j, k) in triplets {
        let (zi, zj, zk) = (z.row(i), z.row(j), z.row(k));
        let (first, second) = if literal { (j, k) } else { (k, j) };
        let margin = cosine(zi, z.row(first)) - cosine(zi, z.row(second)) + alpha;
        if margin > 0.0 {
            loss += margin;
            let (zf, zs) = if literal { (zj, zk) } else { (zk, zj) };
            cosine_grad(zi, zf, 1.0 / t, &mut grad, i, first);
            cosine_grad(zi, zs, -1.0 / t, &mut grad, i, second);
        }
    }
    (TripletValue { loss: loss / t, active: true }, grad)
}

pub fn triplet_loss(z: &Array2<f64>, triplets: &[Triplet], alpha: f64, literal: bool) -> TripletValue {
    triplet_loss_and_grad(z, triplets, alpha, literal).0
}

/// `pbnc + gamma_s (ce + gamma_t triplet)`.
pub fn combine_losses(pbnc: f64, ce: f64, triplet: f64, gamma_s: f64, gamma_t: f64) -> f64 {
    pbnc + gamma_s * (ce + gamma_t * triplet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn four_node(flip: bool) -> SignedGraph {
        let w01 = if flip { -1.0 } else { 1.0 };
        SignedGraph::from_edges(4, &[(0, 1, w01), (2, 3, 1.0), (0, 2, -1.0)], false).unwrap()
    }

    fn hard() -> Array2<f64> {
        array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn pbnc_examples() {
        let all = [0, 1, 2, 3];
        assert_eq!(pbnc_loss(&hard(), &four_node(false), &all).unwrap(), 0.0);
        let v = pbnc_loss(&hard(), &four_node(true), &all).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn pbnc_uniform_reduction() {
        let g = four_node(true);
        let k = 3;
        let p = Array2::from_elem((4, k), 1.0 / k as f64);
        // 1^T (D+ - A) 1 = sum d+ - sum A; 1^T Dbar 1 = sum |A|.
        let a = g.adjacency().to_dense();
        let d_pos: f64 = a.iter().map(|v| v.max(0.0)).sum();
        let expected = k as f64 * (d_pos - a.sum()) / a.iter().map(|v| v.abs()).sum::<f64>();
        let v = pbnc_loss(&p, &g, &[0, 1, 2, 3]).unwrap();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn pbnc_rejects_non_stochastic() {
        let p = array![[0.5, 0.4], [1.0, 0.0]];
        let g = SignedGraph::from_edges(2, &[(0, 1, 1.0)], false).unwrap();
        assert!(matches!(pbnc_loss(&p, &g, &[0, 1]), Err(Error::NotStochastic { row: 0, .. })));
    }

    #[test]
    fn pbnc_uses_induced_degrees() {
        // Node 2 outside the subset: its edges vanish from the degrees.
        let g = SignedGraph::from_edges(3, &[(0, 1, -1.0), (1, 2, 1.0)], false).unwrap();
        let p = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // Subgraph {0,1}: one negative edge inside cluster 0, d+ = 0, dbar = [1,1].
        let v = pbnc_loss(&p, &g, &[0, 1]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ce_examples() {
        let labels = [0, 1];
        let p = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(ce_loss(&p, &[0, 1], &labels).unwrap(), 0.0);
        let u = Array2::from_elem((1, 4), 0.25);
        assert!((ce_loss(&u, &[0], &[2]).unwrap() - 4f64.ln()).abs() < 1e-12);
        let q = array![[0.5, 0.5], [0.75, 0.25]];
        let v = ce_loss(&q, &[0, 1], &[0, 1]).unwrap();
        assert!((v - 1.0397207708399179).abs() < 1e-12);
        assert!(matches!(ce_loss(&q, &[], &[0, 1]), Err(Error::EmptySeedSet)));
    }

    #[test]
    fn triplet_examples() {
        let z = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(triplet_loss(&z, &[(0, 1, 2)], 0.0, false).loss, 0.0);
        let z2 = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert_eq!(triplet_loss(&z2, &[(0, 1, 2)], 0.0, false).loss, 1.0);
        let z3 = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert!((triplet_loss(&z3, &[(0, 1, 2)], 0.5, false).loss - 0.5).abs() < 1e-12);
        let empty = triplet_loss(&z3, &[], 0.5, false);
        assert_eq!(empty, TripletValue { loss: 0.0, active: false });
        // Literal form penalizes the separated configuration instead.
        assert_eq!(triplet_loss(&z, &[(0, 1, 2)], 0.0, true).loss, 1.0);
    }

    #[test]
    fn zero_vector_cosine_is_zero() {
        let z = array![[0.0, 0.0], [1.0, 0.0]];
        assert_eq!(cosine(z.row(0), z.row(1)), 0.0);
    }

    #[test]
    fn total_loss_arithmetic() {
        assert!((combine_losses(0.5, 0.02, 0.1, 50.0, 0.1) - 2.0).abs() < 1e-12);
    }
}
