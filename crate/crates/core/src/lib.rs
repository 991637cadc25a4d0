//! Gated linear / non-linear graph collaborative filtering.
//!
//! The crate covers the whole pipeline: interaction ingestion and splitting
//! ([`graph`]), the dense/sparse numeric kernels and the straight-through
//! Gumbel-softmax primitive ([`numerics`]), the four-layer gated propagation
//! model with its hand-written backward pass ([`model`]), BPR training
//! ([`trainer`]), top-k evaluation ([`eval`]) and the post-hoc node-class /
//! centrality analysis ([`analysis`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod numerics;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
