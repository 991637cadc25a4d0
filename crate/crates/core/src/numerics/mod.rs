//! Numeric building blocks: dense matrices, CSR sparse-dense products,
//! activations, seeded random streams and Gumbel sampling.

mod activation;
mod dense;
mod gumbel;
mod rng;
mod sparse;

pub use activation::Activation;
pub(crate) use dense::dot as dense_dot;
pub use dense::DenseMatrix;
pub use gumbel::{
    gumbel_sample, log_sigmoid, sigmoid, softmax, stgs, stgs_with_noise, GateSample, GUMBEL_CLAMP,
};
pub use rng::{Rng, StreamPurpose};
pub use sparse::{spmm, CsrMatrix};
