//! Signed stochastic block models (SSBM), polarized SSBMs planted in a signed
//! Erdős–Rényi background, and the low-degree densification pass applied to
//! generated graphs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::rng::{derive_seed, seeded, ChaCha8Rng};

/// Degree every node is lifted to by [`densify_low_degree`].
pub const DENSIFY_TARGET_DEGREE: usize = 3;

/// A graph with a ground-truth partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub graph: SignedGraph,
    pub labels: Vec<usize>,
    pub num_clusters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsbmParams {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub rho: f64,
    pub eta: f64,
    pub seed: u64,
}

/// Polarized SSBM: `r` two-block SSBM communities planted in a signed
/// Erdős–Rényi ambient graph on `n` nodes. `community_size` is the default size
/// `N`; the communities together hold `N * r` nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolSsbmParams {
    pub n: usize,
    pub r: usize,
    pub p: f64,
    pub rho: f64,
    pub eta: f64,
    pub community_size: usize,
    pub seed: u64,
}

/// Output of [`sample_polarized`]: the labeled graph plus the planted community
/// sizes (before connectivity restriction).
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizedSample {
    pub labeled: LabeledGraph,
    pub community_sizes: Vec<usize>,
}

impl LabeledGraph {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

impl SsbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("SSBM needs K >= 2, got {}", self.k)));
        }
        check_common(self.n, self.k, self.p, self.rho, self.eta)
    }
}

impl PolSsbmParams {
    pub fn num_clusters(&self) -> usize {
        1 + 2 * self.r
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidParameter("need at least one community".into()));
        }
        let planted = self.community_size * self.r;
        if planted > self.n {
            return Err(Error::InvalidParameter(format!(
                "communities need {planted} nodes but the graph has {}",
                self.n
            )));
        }
        check_common(self.n, self.r, self.p, self.rho, self.eta)
    }
}

fn check_common(n: usize, k: usize, p: f64, rho: f64, eta: f64) -> Result<()> {
    if n < k {
        return Err(Error::InvalidParameter(format!("n = {n} smaller than K = {k}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside (0, 1]")));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("size ratio {rho} must be >= 1")));
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::InvalidParameter(format!("flip probability {eta} outside [0, 0.5)")));
    }
    Ok(())
}

/// Block sizes `n_0 <= ... <= n_{K-1}` summing to `n` whose largest/smallest
/// ratio is approximately `rho`.
pub fn block_sizes(n: usize, k: usize, rho: f64) -> Result<Vec<usize>> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!("cannot split {n} nodes into {k} blocks")));
    }
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("size ratio {rho} must be >= 1")));
    }
    if k == 1 {
        return Ok(vec![n]);
    }
    let mut sizes = Vec::with_capacity(k);
    if rho == 1.0 {
        let base = n / k;
        sizes.extend(std::iter::repeat(base).take(k - 1));
    } else {
        let rho0 = rho.powf(1.0 / (k as f64 - 1.0));
        let first = (n as f64 * (1.0 - rho0) / (1.0 - rho0.powi(k as i32))).floor() as usize;
        sizes.push(first);
        for i in 1..k - 1 {
            let next = (rho0 * sizes[i - 1] as f64).floor() as usize;
            sizes.push(next);
        }
    }
    let used: usize = sizes.iter().sum();
    if used >= n || sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidParameter(format!(
            "{n} nodes too few for {k} blocks with ratio {rho}"
        )));
    }
    sizes.push(n - used);
    Ok(sizes)
}

/// Visits every unordered pair `i < j` of `nodes` that is selected independently
/// with probability `p`, using geometric skips so the cost is proportional to the
/// number of selected pairs.
fn for_each_random_pair(nodes: &[usize], p: f64, rng: &mut ChaCha8Rng, mut f: impl FnMut(usize, usize, &mut ChaCha8Rng)) {
    let m = nodes.len();
    if m < 2 {
        return;
    }
    let log_q = (1.0 - p).ln();
    let skip = |rng: &mut ChaCha8Rng| -> u64 {
        if p >= 1.0 {
            return 0;
        }
        // U in (0, 1]
        let u: f64 = 1.0 - rng.gen::<f64>();
        let s = (u.ln() / log_q).floor();
        if s >= u64::MAX as f64 {
            u64::MAX
        } else {
            s as u64
        }
    };
    // Linear index over pairs (i, j), i < j, in row-major order.
    let total = (m as u64) * (m as u64 - 1) / 2;
    let (mut row, mut row_start) = (0usize, 0u64);
    let mut t = skip(rng);
    while t < total {
        while t >= row_start + (m - 1 - row) as u64 {
            row_start += (m - 1 - row) as u64;
            row += 1;
        }
        let col = row + 1 + (t - row_start) as usize;
        f(nodes[row], nodes[col], rng);
        t = t.saturating_add(1).saturating_add(skip(rng));
    }
}

fn flip(sign: f64, eta: f64, rng: &mut ChaCha8Rng) -> f64 {
    if eta > 0.0 && rng.gen::<f64>() < eta {
        -sign
    } else {
        sign
    }
}

/// Planted SSBM edges over `nodes`: `+1` within a block, `-1` across, each
/// created with probability `p` and sign-flipped with probability `eta`.
fn plant_ssbm(nodes: &[usize], labels: &[usize], p: f64, eta: f64, rng: &mut ChaCha8Rng, out: &mut Vec<(usize, usize, f64)>) {
    for_each_random_pair(nodes, p, rng, |a, b, rng| {
        let sign = if labels[a] == labels[b] { 1.0 } else { -1.0 };
        out.push((a, b, flip(sign, eta, rng)));
    });
}

/// Signed Erdős–Rényi graph: each pair gets an edge with probability `p`, with
/// sign `+1` or `-1` equally likely.
pub fn sample_signed_er(n: usize, p: f64, seed: u64) -> Result<SignedGraph> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside (0, 1]")));
    }
    let mut rng = seeded(seed);
    let edges = signed_er_edges(n, p, &mut rng);
    SignedGraph::from_edges(n, &edges, false)
}

fn signed_er_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let nodes: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    for_each_random_pair(&nodes, p, rng, |a, b, rng| {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        edges.push((a, b, sign));
    });
    edges
}

/// SSBM edges and labels before connectivity restriction and densification.
pub fn sample_ssbm_raw(params: &SsbmParams) -> Result<LabeledGraph> {
    params.validate()?;
    let sizes = block_sizes(params.n, params.k, params.rho)?;
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat(b).take(s))
        .collect();
    let mut rng = seeded(params.seed);
    let nodes: Vec<usize> = (0..params.n).collect();
    let mut edges = Vec::new();
    plant_ssbm(&nodes, &labels, params.p, params.eta, &mut rng, &mut edges);
    Ok(LabeledGraph {
        graph: SignedGraph::from_edges(params.n, &edges, false)?,
        labels,
        num_clusters: params.k,
    })
}

/// Samples `SSBM(n, K, p, rho, eta)`, keeps the largest connected component and
/// densifies nodes of degree at most two.
pub fn sample_ssbm(params: &SsbmParams) -> Result<LabeledGraph> {
    let raw = sample_ssbm_raw(params)?;
    let restricted = restrict_to_lcc(raw)?;
    densify_low_degree(&restricted, derive_seed(params.seed, 1))
}

fn restrict_to_lcc(lg: LabeledGraph) -> Result<LabeledGraph> {
    let (graph, kept) = lg.graph.largest_connected_component()?;
    let labels = kept.iter().map(|&i| lg.labels[i]).collect();
    Ok(LabeledGraph {
        graph,
        labels,
        num_clusters: lg.num_clusters,
    })
}

/// Samples a polarized SSBM. Labels: ambient nodes are cluster 0, the two blocks of
/// community `c` (0-based) are clusters `2c + 1` and `2c + 2`.
pub fn sample_polarized(params: &PolSsbmParams) -> Result<PolarizedSample> {
    params.validate()?;
    let n = params.n;
    let community_sizes = block_sizes(params.community_size * params.r, params.r, params.rho)?;
    let mut rng = seeded(params.seed);

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut labels = vec![0usize; n];
    let mut community_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(params.r);
    let mut offset = 0;
    for (c, &size) in community_sizes.iter().enumerate() {
        let nodes: Vec<usize> = perm[offset..offset + size].to_vec();
        let halves = block_sizes(size, 2, params.rho)?;
        for (k, &node) in nodes.iter().enumerate() {
            labels[node] = if k < halves[0] { 2 * c + 1 } else { 2 * c + 2 };
            community_of[node] = c;
        }
        members.push(nodes);
        offset += size;
    }

    let mut edges: Vec<(usize, usize, f64)> = signed_er_edges(n, params.p, &mut rng)
        .into_iter()
        .filter(|&(a, b, _)| community_of[a] == usize::MAX || community_of[a] != community_of[b])
        .collect();
    for nodes in &members {
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        plant_ssbm(&sorted, &labels, params.p, params.eta, &mut rng, &mut edges);
    }

    let raw = LabeledGraph {
        graph: SignedGraph::from_edges(n, &edges, false)?,
        labels,
        num_clusters: params.num_clusters(),
    };
    let restricted = restrict_to_lcc(raw)?;
    let labeled = densify_low_degree(&restricted, derive_seed(params.seed, 1))?;
    Ok(PolarizedSample {
        labeled,
        community_sizes,
    })
}

/// Wires extra edges to nodes of degree at most two until they reach degree
/// [`DENSIFY_TARGET_DEGREE`]. Partners are uniform non-neighbors; the sign of an
/// added edge agrees with the partition (`+1` same label, `-1` otherwise).
pub fn densify_low_degree(lg: &LabeledGraph, seed: u64) -> Result<LabeledGraph> {
    let g = &lg.graph;
    let n = g.n();
    if n <= DENSIFY_TARGET_DEGREE {
        return Ok(lg.clone());
    }
    if g.is_directed() {
        return Err(Error::InvalidParameter("densification expects an undirected graph".into()));
    }
    let mut rng = seeded(seed);
    let mut nbrs: Vec<BTreeSet<usize>> = g.undirected_neighbors().into_iter().map(|v| v.into_iter().collect()).collect();
    let mut edges = g.edges();
    for u in 0..n {
        while nbrs[u].len() < DENSIFY_TARGET_DEGREE {
            if nbrs[u].len() + 1 >= n {
                break;
            }
            let v = loop {
                let cand = rng.gen_range(0..n);
                if cand != u && !nbrs[u].contains(&cand) {
                    break cand;
                }
            };
            let sign = if lg.labels[u] == lg.labels[v] { 1.0 } else { -1.0 };
            edges.push((u.min(v), u.max(v), sign));
            nbrs[u].insert(v);
            nbrs[v].insert(u);
        }
    }
    Ok(LabeledGraph {
        graph: SignedGraph::from_edges(n, &edges, false)?,
        labels: lg.labels.clone(),
        num_clusters: lg.num_clusters,
    })
}
