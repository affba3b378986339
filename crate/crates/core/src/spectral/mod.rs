//! Spectral machinery: eigensolvers, k-means, the nine signed spectral
//! clustering baselines and eigenvector input features.

pub mod baselines;
pub mod eigen;
pub mod features;
pub mod kmeans;

pub use baselines::{baseline_cluster, baseline_embedding, baseline_matrix, baseline_problem, BaselineMatrix, BaselineMethod};
pub use eigen::{eig_extreme, eig_extreme_pencil, EigenOptions, EigenResult, Extreme, SymmetricOperator};
pub use features::{input_features, standardize, FeatureMode};
pub use kmeans::{kmeans, KMeansOptions, KMeansResult};
