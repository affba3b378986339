use thiserror::Error;

/// Errors produced by graph construction, generators, training and the spectral solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: usize, dst: usize },

    #[error("edge ({src}, {dst}) has zero weight")]
    ZeroWeight { src: usize, dst: usize },

    #[error("edge ({src}, {dst}) has non-finite weight")]
    NonFiniteWeight { src: usize, dst: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("graph has no edges")]
    NoEdges,

    #[error("probability matrix is not row-stochastic (row {row} sums to {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty seed set")]
    EmptySeedSet,

    #[error("hop {0} not supported by the balance-theory variant (only h = 2)")]
    UnsupportedHop(usize),

    #[error("eigensolver did not converge: worst residual {residual:e} after {iterations} restarts")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("cluster {cluster} too small for the requested split")]
    SplitTooSmall { cluster: usize },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
