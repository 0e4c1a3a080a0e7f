//! Community detection in the d-uniform hypergraph stochastic block model.
//!
//! The crate covers sampling from the model, spectral initialisation,
//! likelihood refinement, the mismatch-ratio metric, the minimax error
//! exponent, brute-force reference implementations and a Monte Carlo
//! experiment harness.

pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod rate;
pub mod refine;
pub mod relations;
pub mod seed;
pub mod spectral;

pub use error::{HsbmError, Result};
pub use metrics::{mismatch_ratio, Mismatch};
pub use model::{balanced_assignment, sample_hypergraph, Assignment, Hypergraph, ModelParams};
pub use rate::{minimax_exponent, RateReport};
pub use refine::{detect, DetectConfig, Mode};
pub use relations::{confusion_coefficients, neighbor_pairs, Histogram, RelationTable};
pub use spectral::{spectral_init, SpectralConfig};
