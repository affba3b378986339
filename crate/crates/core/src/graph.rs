//! Signed graph representation, sign decomposition, normalization of the
//! positive/negative parts, symmetrization and connectivity.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Default self-loop weight added to the positive part before row normalization.
pub const DEFAULT_TAU_POS: f64 = 0.5;
/// Default self-loop weight for the negative part: a node is not its own enemy.
pub const DEFAULT_TAU_NEG: f64 = 0.0;

/// Sparse weighted signed graph, directed or undirected. Self-loops are allowed,
/// multi-edges and zero weights are not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedGraph {
    n: usize,
    directed: bool,
    adjacency: CsrMatrix,
}

/// `A = pos - neg` with `pos, neg >= 0` and disjoint supports.
#[derive(Clone, Debug, PartialEq)]
pub struct SignDecomposition {
    pub pos: CsrMatrix,
    pub neg: CsrMatrix,
}

/// Row sums of `A+`, `A-` and `|A|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeSet {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub abs: Vec<f64>,
}

/// The four row-normalized propagation matrices: source positive/negative from
/// `A+`/`A-`, target positive/negative from their transposes.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedChannels {
    pub s_pos: CsrMatrix,
    pub s_neg: CsrMatrix,
    pub t_pos: CsrMatrix,
    pub t_neg: CsrMatrix,
    pub tau_pos: f64,
    pub tau_neg: f64,
}

impl SignedGraph {
    /// Builds a graph from `(src, dst, weight)` edges. For undirected graphs each
    /// edge is stored in both directions and `(i, j)`/`(j, i)` count as the same pair.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], directed: bool) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut triplets = Vec::with_capacity(if directed { edges.len() } else { 2 * edges.len() });
        for &(src, dst, w) in edges {
            for id in [src, dst] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if w == 0.0 {
                return Err(Error::ZeroWeight { src, dst });
            }
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { src, dst });
            }
            let key = if directed { (src, dst) } else { (src.min(dst), src.max(dst)) };
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { src, dst });
            }
            triplets.push((src, dst, w));
            if !directed && src != dst {
                triplets.push((dst, src, w));
            }
        }
        Ok(Self {
            n,
            directed,
            adjacency: CsrMatrix::from_triplets(n, n, triplets),
        })
    }

    /// Wraps an adjacency matrix. Undirected graphs must pass a symmetric matrix.
    pub fn from_adjacency(adjacency: CsrMatrix, directed: bool) -> Result<Self> {
        if adjacency.nrows() != adjacency.ncols() {
            return Err(Error::DimensionMismatch("adjacency must be square".into()));
        }
        if !directed && !adjacency.is_symmetric(0.0) {
            return Err(Error::InvalidParameter("undirected graph needs a symmetric adjacency".into()));
        }
        if let Some((i, j, _)) = adjacency.triplets().find(|(_, _, v)| !v.is_finite()) {
            return Err(Error::NonFiniteWeight { src: i, dst: j });
        }
        Ok(Self {
            n: adjacency.nrows(),
            directed,
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    /// Edges as given at construction: every stored entry for directed graphs,
    /// one `(i, j, w)` with `i <= j` per undirected edge.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .triplets()
            .filter(|&(i, j, _)| self.directed || i <= j)
            .collect()
    }

    pub fn num_edges(&self) -> usize {
        if self.directed {
            self.adjacency.nnz()
        } else {
            let loops = (0..self.n).filter(|&i| self.adjacency.get(i, i) != 0.0).count();
            (self.adjacency.nnz() - loops) / 2 + loops
        }
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency.get(i, j)
    }

    pub fn decompose(&self) -> SignDecomposition {
        SignDecomposition {
            pos: self.adjacency.map_values(|v| v.max(0.0)),
            neg: self.adjacency.map_values(|v| -v.min(0.0)),
        }
    }

    pub fn degrees(&self) -> DegreeSet {
        let mut pos = vec![0.0; self.n];
        let mut neg = vec![0.0; self.n];
        for (i, _, v) in self.adjacency.triplets() {
            if v > 0.0 {
                pos[i] += v;
            } else {
                neg[i] -= v;
            }
        }
        let abs = pos.iter().zip(&neg).map(|(p, q)| p + q).collect();
        DegreeSet { pos, neg, abs }
    }

    /// `(A + A^T) / 2`; entries that cancel to exactly zero leave the support.
    pub fn symmetrize(&self) -> SignedGraph {
        let sym = self.adjacency.add_scaled(0.5, &self.adjacency.transpose(), 0.5);
        SignedGraph {
            n: self.n,
            directed: false,
            adjacency: sym,
        }
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> SignedGraph {
        SignedGraph {
            n: nodes.len(),
            directed: self.directed,
            adjacency: self.adjacency.submatrix(nodes),
        }
    }

    /// Unsigned, undirected neighbor lists of the support (self-loops dropped).
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.n];
        for (i, j, _) in self.adjacency.triplets() {
            if i != j {
                nbrs[i].push(j);
                nbrs[j].push(i);
            }
        }
        for list in &mut nbrs {
            list.sort_unstable();
            list.dedup();
        }
        nbrs
    }

    /// Weakly connected components; component ids are ordered by smallest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let nbrs = self.undirected_neighbors();
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in &nbrs[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Largest weakly connected component, ties going to the component holding the
    /// smallest node id. Returns the subgraph and the sorted list of kept original ids
    /// (new id `k` is original id `kept[k]`).
    pub fn largest_connected_component(&self) -> Result<(SignedGraph, Vec<usize>)> {
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        let comp = self.connected_components();
        let ncomp = comp.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; ncomp];
        for &c in &comp {
            sizes[c] += 1;
        }
        // Component ids follow first appearance, so the first maximum is the tie winner.
        let best = (0..ncomp).fold(0, |b, c| if sizes[c] > sizes[b] { c } else { b });
        let kept: Vec<usize> = (0..self.n).filter(|&i| comp[i] == best).collect();
        Ok((self.induced_subgraph(&kept), kept))
    }

    /// Drops nodes whose unsigned degree is at most `min_degree - 1`, repeatedly.
    pub fn filter_min_degree(&self, min_degree: usize) -> (SignedGraph, Vec<usize>) {
        let mut kept: Vec<usize> = (0..self.n).collect();
        let mut g = self.clone();
        loop {
            let nbrs = g.undirected_neighbors();
            let keep: Vec<usize> = (0..g.n).filter(|&i| nbrs[i].len() >= min_degree).collect();
            if keep.len() == g.n {
                return (g, kept);
            }
            kept = keep.iter().map(|&i| kept[i]).collect();
            g = g.induced_subgraph(&keep);
        }
    }

    pub fn normalized_channels(&self, tau_pos: f64, tau_neg: f64) -> Result<NormalizedChannels> {
        let parts = self.decompose();
        Ok(NormalizedChannels {
            s_pos: row_normalize(&parts.pos, tau_pos)?,
            s_neg: row_normalize(&parts.neg, tau_neg)?,
            t_pos: row_normalize(&parts.pos.transpose(), tau_pos)?,
            t_neg: row_normalize(&parts.neg.transpose(), tau_neg)?,
            tau_pos,
            tau_neg,
        })
    }
}

impl SignDecomposition {
    pub fn recombine(&self) -> CsrMatrix {
        self.pos.add_scaled(1.0, &self.neg, -1.0)
    }
}

/// `D~^{-1} (M + tau I)` where `D~` holds the row sums of `M + tau I`.
/// Rows without mass stay all-zero.
pub fn row_normalize(part: &CsrMatrix, tau: f64) -> Result<CsrMatrix> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {tau}")));
    }
    if part.nrows() != part.ncols() {
        return Err(Error::DimensionMismatch("row_normalize needs a square matrix".into()));
    }
    if part.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("row_normalize needs a nonnegative matrix".into()));
    }
    let n = part.nrows();
    let shifted = if tau > 0.0 {
        part.add_scaled(1.0, &CsrMatrix::from_diagonal(&vec![tau; n]), 1.0)
    } else {
        part.clone()
    };
    let inv: Vec<f64> = shifted
        .row_sums()
        .into_iter()
        .map(|s| if s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    Ok(shifted.scale(&inv, &vec![1.0; n]))
}
