//! Constructive randomized neural networks on matrix inputs.
//!
//! The crate builds single-hidden-layer sigmoid networks two ways:
//!
//! * **Stochastic configuration** ([`configurator::train_scn`]) — nodes are
//!   added one at a time; each candidate must pass a data-dependent
//!   admissibility test before acceptance, and output weights are refit by
//!   least squares after every addition.
//! * **One-shot random features** ([`rvfl::train_rvfl`]) — all hidden
//!   parameters are drawn blindly and only the output weights are fit.
//!
//! Both come in a flat-input (1D) and a bilinear matrix-input (2D) variant;
//! 2D nodes compute `g(u^T x v + b)` and are exactly equivalent to flat nodes
//! with the rank-1 weight `vec(u v^T)`.
//!
//! Supporting modules: [`analysis`] (perturbation bounds and a generalization
//! indicator), [`stats`] (Monte Carlo study of near-zero coordinates in
//! random weight vectors), [`data`]/[`metrics`] (datasets and evaluation),
//! [`linalg`] (dense matrices and min-norm least squares), and [`rng`]
//! (deterministic child streams for reproducible parallelism).

pub mod analysis;
pub mod configurator;
pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod rvfl;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{Builder, HiddenNode, InputShape, Network, NodeKind};

/// Crate version recorded in CSV output comments.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
