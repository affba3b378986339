//! Stratified train/validation/test splits with seed nodes.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disjoint node sets covering every node; `seeds` is a subset of `train`.
/// All lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seeds: Vec<usize>,
}

/// Test and validation fractions per cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub test: f64,
    pub val: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { test: 0.1, val: 0.1 }
    }
}

/// `ceil(frac * count)`, forgiving rounding noise in the product.
pub fn ceil_count(frac: f64, count: usize) -> usize {
    let x = frac * count as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl Split {
    pub fn num_nodes(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn mask(nodes: &[usize], n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in nodes {
            m[v] = true;
        }
        m
    }
}

/// Per cluster: `ceil(test * size)` test nodes, `ceil(val * size)` validation
/// nodes, the rest training, of which `ceil(seed_ratio * train)` are seeds. When
/// a cluster is too small the validation share is dropped first.
pub fn make_split(labels: &[usize], fractions: SplitFractions, seed_ratio: f64, rng: &mut impl Rng) -> Result<Split> {
    let SplitFractions { test, val } = fractions;
    if !(0.0..1.0).contains(&test) || !(0.0..1.0).contains(&val) || test + val >= 1.0 {
        return Err(Error::InvalidParameter(format!("split fractions test={test} val={val}")));
    }
    if !(0.0..=1.0).contains(&seed_ratio) {
        return Err(Error::InvalidParameter(format!("seed ratio {seed_ratio} outside [0, 1]")));
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (v, &c) in labels.iter().enumerate() {
        members[c].push(v);
    }
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seeds: Vec::new(),
    };
    for (cluster, mut nodes) in members.into_iter().enumerate() {
        if nodes.is_empty() {
            continue;
        }
        nodes.shuffle(rng);
        let size = nodes.len();
        let n_test = ceil_count(test, size);
        let mut n_val = ceil_count(val, size);
        if n_test + n_val >= size {
            n_val = 0;
        }
        if n_test >= size {
            return Err(Error::SplitTooSmall { cluster });
        }
        split.test.extend_from_slice(&nodes[..n_test]);
        split.val.extend_from_slice(&nodes[n_test..n_test + n_val]);
        let train = &nodes[n_test + n_val..];
        split.train.extend_from_slice(train);
        split.seeds.extend_from_slice(&train[..ceil_count(seed_ratio, train.len())]);
    }
    for list in [&mut split.train, &mut split.val, &mut split.test, &mut split.seeds] {
        list.sort_unstable();
    }
    Ok(split)
}
