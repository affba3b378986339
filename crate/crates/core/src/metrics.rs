//! Partition agreement (ARI, NMI) and structural quality measures of a signed
//! clustering: unhappy-edge ratio, balanced normalized cut, unbalanced triangles.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;

/// Contingency table between two labelings over the same nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Contingency {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

impl Contingency {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!("labelings of length {} and {}", a.len(), b.len())));
        }
        let ids_a = compact(a);
        let ids_b = compact(b);
        let ka = ids_a.iter().max().map_or(0, |m| m + 1);
        let kb = ids_b.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; kb]; ka];
        for (&i, &j) in ids_a.iter().zip(&ids_b) {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..kb).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }

    /// True when both labelings describe the same partition.
    pub fn same_partition(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self.counts.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
            && (0..self.col_sums.len()).all(|j| self.counts.iter().filter(|r| r[j] > 0).count() == 1)
    }
}

/// Maps arbitrary label values onto `0..k` in order of first appearance.
fn compact(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index (Hubert & Arabie).
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = Contingency::new(a, b)?;
    if c.total < 2 {
        return Err(Error::InvalidParameter("ARI needs at least two nodes".into()));
    }
    let index: f64 = c.counts.iter().flatten().map(|&x| choose2(x)).sum();
    let sum_a: f64 = c.row_sums.iter().map(|&x| choose2(x)).sum();
    let sum_b: f64 = c.col_sums.iter().map(|&x| choose2(x)).sum();
    let expected = sum_a * sum_b / choose2(c.total);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if c.same_partition() { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Normalized mutual information with geometric-mean normalization.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = Contingency::new(a, b)?;
    if c.total == 0 {
        return Err(Error::InvalidParameter("NMI of empty labelings".into()));
    }
    let n = c.total as f64;
    let entropy = |sums: &[u64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&c.row_sums);
    let hb = entropy(&c.col_sums);
    if ha == 0.0 || hb == 0.0 {
        return Ok(if c.same_partition() { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, row) in c.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (c.row_sums[i] as f64 * c.col_sums[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of edges violating their expected sign: positive edges across
/// clusters plus negative edges within clusters.
pub fn unhappy_ratio(graph: &SignedGraph, labels: &[usize]) -> Result<f64> {
    check_labels(graph, labels)?;
    let edges = graph.edges();
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    let unhappy = edges
        .iter()
        .filter(|&&(i, j, w)| (labels[i] == labels[j]) != (w > 0.0))
        .count();
    Ok(unhappy as f64 / edges.len() as f64)
}

fn check_labels(graph: &SignedGraph, labels: &[usize]) -> Result<()> {
    if labels.len() != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    Ok(())
}

/// Balanced normalized cut of a hard partition:
/// `sum_k x_k^T (D+ - A) x_k / x_k^T Dbar x_k`, empty clusters contributing zero.
/// Directed graphs are symmetrized first, as in the PBNC loss.
pub fn bnc_value(graph: &SignedGraph, labels: &[usize]) -> Result<f64> {
    check_labels(graph, labels)?;
    let sym;
    let graph = if graph.is_directed() {
        sym = graph.symmetrize();
        &sym
    } else {
        graph
    };
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let deg = graph.degrees();
    let mut num = vec![0.0; k];
    let mut den = vec![0.0; k];
    for i in 0..graph.n() {
        num[labels[i]] += deg.pos[i];
        den[labels[i]] += deg.abs[i];
    }
    for (i, j, w) in graph.adjacency().triplets() {
        if labels[i] == labels[j] {
            num[labels[i]] -= w;
        }
    }
    Ok(num
        .iter()
        .zip(&den)
        .map(|(&a, &b)| if b > 0.0 { a / b } else { 0.0 })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleStats {
    /// Triangles with an odd number of negative edges.
    pub unbalanced: u64,
    pub total: u64,
}

impl TriangleStats {
    /// `unbalanced / total`, or `None` for a triangle-free graph.
    pub fn violation_ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.unbalanced as f64 / self.total as f64)
    }
}

/// Counts triangles on the sign pattern of `(A + A^T) / 2`, ignoring weights and
/// self-loops.
pub fn count_unbalanced_triangles(graph: &SignedGraph) -> TriangleStats {
    let sym = if graph.is_directed() { graph.symmetrize() } else { graph.clone() };
    let adj = sym.adjacency();
    let n = sym.n();
    // Forward neighbor lists (j > i) with signs.
    let fwd: Vec<Vec<(usize, bool)>> = (0..n)
        .map(|i| adj.row(i).filter(|&(j, _)| j > i).map(|(j, w)| (j, w < 0.0)).collect())
        .collect();
    let mut stats = TriangleStats { unbalanced: 0, total: 0 };
    let mut mark: Vec<Option<bool>> = vec![None; n];
    for u in 0..n {
        for &(v, neg_uv) in &fwd[u] {
            for &(w, neg_vw) in &fwd[v] {
                mark[w] = Some(neg_vw);
            }
            for &(w, neg_uw) in &fwd[u] {
                if let Some(neg_vw) = mark[w] {
                    stats.total += 1;
                    let negatives = neg_uv as u8 + neg_vw as u8 + neg_uw as u8;
                    if negatives % 2 == 1 {
                        stats.unbalanced += 1;
                    }
                }
            }
            for &(w, _) in &fwd[v] {
                mark[w] = None;
            }
        }
    }
    stats
}
