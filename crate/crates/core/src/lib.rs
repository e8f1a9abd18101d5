//! One-step multi-view clustering with diverse representation.
//!
//! Each of the `V` views of a dataset is factorized as `X^(v) ≈ H_p^(v) Z_p`
//! into `m` latent spaces of increasing dimension, with orthonormal per-view
//! bases `H_p^(v)` and consensus embeddings `Z_p` shared across views. A hard
//! `k`-cluster partition is learned jointly with the factorization — inside
//! the same alternating optimization, not by a separate k-means afterwards —
//! together with simplex weights `α` that balance the latent spaces.
//!
//! The crate is organized as:
//! - [`linalg`]: dense column-major matrices and a thin SVD;
//! - [`dataset`]: loading, synthesis, and preprocessing of multi-view data;
//! - [`solver`]: the alternating optimization itself;
//! - [`metrics`]: clustering quality measures (accuracy, NMI, purity, F-score);
//! - [`oracle`] (feature `oracle`): naive reference implementations for tests.

pub mod dataset;
pub mod linalg;
pub mod metrics;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod solver;

pub use dataset::{DatasetError, MultiViewDataset, SyntheticSpec};
pub use linalg::{LinalgError, MatrixD, ThinSvd};
pub use metrics::{LabelPair, MetricsError};
pub use solver::{FitResult, Partition, SolverConfig, SolverError, Variant, Weights};
