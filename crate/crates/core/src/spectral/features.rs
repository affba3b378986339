//! Eigenvector input features for the network.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::baselines::{baseline_problem, BaselineMatrix, BaselineMethod};
use super::eigen::{eig_extreme, EigenOptions, Extreme};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;

/// Eigenvalues smaller than this in magnitude are replaced by it before division.
pub const EIGENVALUE_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Top-`K` eigenvectors of `(A + A^T) / 2`, each scaled by its eigenvalue.
    Synthetic,
    /// Bottom-`K` eigenvectors of the normalized signed Laplacian, each divided by
    /// its eigenvalue.
    Real,
}

/// `n x K` eigen-features of a graph.
pub fn input_features(graph: &SignedGraph, k: usize, mode: FeatureMode, seed: u64) -> Result<Array2<f64>> {
    if k == 0 || k > graph.n() {
        return Err(Error::InvalidParameter(format!("{k} eigen-features for {} nodes", graph.n())));
    }
    let method = match mode {
        FeatureMode::Synthetic => BaselineMethod::Adjacency,
        FeatureMode::Real => BaselineMethod::LaplacianSym,
    };
    let BaselineMatrix::Single(matrix) = baseline_problem(graph, method).matrix else {
        unreachable!("single-matrix methods")
    };
    let end = match mode {
        FeatureMode::Synthetic => Extreme::Largest,
        FeatureMode::Real => Extreme::Smallest,
    };
    let eig = eig_extreme(&matrix, k, end, &EigenOptions { seed, ..Default::default() })?;
    let mut features = eig.vectors;
    for (mut col, &lambda) in features.columns_mut().into_iter().zip(&eig.values) {
        match mode {
            FeatureMode::Synthetic => col *= lambda,
            FeatureMode::Real => {
                let d = if lambda.abs() < EIGENVALUE_FLOOR { EIGENVALUE_FLOOR } else { lambda };
                col /= d;
            }
        }
    }
    Ok(features)
}

/// Column-wise standardization to zero mean and unit variance; constant columns
/// are only centered.
pub fn standardize(features: &Array2<f64>) -> Array2<f64> {
    let mut out = features.clone();
    let n = features.nrows().max(1) as f64;
    for mut col in out.columns_mut() {
        let mean = col.sum() / n;
        col -= mean;
        let sd = (col.dot(&col) / n).sqrt();
        if sd > 0.0 {
            col /= sd;
        }
    }
    out
}
