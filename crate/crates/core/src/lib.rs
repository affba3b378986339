//! Signed network clustering with signed mixed-path aggregation (SIMPA).
//!
//! The crate covers the whole pipeline: signed graphs and their normalized
//! positive/negative propagation matrices ([`graph`]), signed stochastic block
//! model generators ([`synth`]), the SIMPA embedding network ([`model`]), the
//! probabilistic balanced normalized cut objective and training loop
//! ([`train`]), spectral baselines ([`spectral`]) and clustering metrics
//! ([`metrics`]).

pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sparse;
pub mod spectral;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::{DegreeSet, NormalizedChannels, SignDecomposition, SignedGraph};
pub use sparse::CsrMatrix;
pub use synth::LabeledGraph;
