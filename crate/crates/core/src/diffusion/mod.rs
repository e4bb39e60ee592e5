//! The frozen generative policy: a conditional DDPM over action vectors.
//!
//! [`DenoiserModel`] predicts the noise component of a noised action given
//! the diffusion step and a context encoding. On top of it sit ancestral
//! sampling ([`sample`]) and the two truncated primitives used to mutate
//! proposals: closed-form forward noising to step `n` ([`forward_noise`]) and
//! the last `n` reverse transitions ([`denoise_from`]).

mod checkpoint;
mod model;
mod sampling;
mod schedule;
mod train;

pub use checkpoint::{
    read_tensor_file, write_tensor_file, Tensor, TensorFile, TensorHeader, FORMAT_VERSION, MAGIC,
};
pub use model::{DenoiserArch, DenoiserModel};
pub use sampling::{denoise_from, forward_noise, forward_noise_with, reverse_step, sample};
pub use schedule::NoiseSchedule;
pub use train::{train_policy, Demo, TrainConfig, TrainOutcome};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("diffusion step {step} outside 1..={steps}")]
    StepOutOfRange { step: usize, steps: usize },
    #[error("{what} has dimension {got}, model expects {expected}")]
    Dim {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("no demonstrations to train on")]
    EmptyDemos,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DiffusionError> = std::result::Result<T, E>;
