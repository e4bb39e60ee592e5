//! Deterministic numerical kernels shared by the policy, the steering loop and
//! the test oracles.
//!
//! Everything is `f64`. Vectors are plain `Vec<f64>` / `&[f64]`; the only
//! dedicated container is [`Mat`], a dense row-major matrix used for MLP
//! weights.

mod gmm;
mod mat;
mod mlp;
mod optim;
mod rng;
mod softmax;

pub use gmm::{gmm_logpdf, DiagGmm};
pub use mat::Mat;
pub use mlp::{Activation, ForwardCache, Layer, Mlp, MlpGrads};
pub use optim::Adam;
pub use rng::{stream_id, RngStream};
pub use softmax::softmax;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("empty population")]
    EmptyPopulation,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = NumericsError> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(NumericsError::DimMismatch { expected, got })
    }
}

/// Euclidean distance between two equal-length slices.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}
