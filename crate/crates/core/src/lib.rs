//! Inference-time steering of a frozen diffusion policy.
//!
//! A small conditional DDPM ([`diffusion`]) plays the role of the pretrained
//! policy. A critic ([`verifier`]) turns the task context into a reward
//! program written in a tiny expression language ([`dsl`]). The steering loop
//! ([`steering`]) samples a population of action proposals, scores them with
//! the reward, resamples elites under a tempered softmax and mutates them by
//! partially re-noising and denoising with the policy. [`refine`] closes the
//! loop with post-execution reflection, [`envsim`] provides toy 2D tasks and
//! [`bench`] runs method comparisons.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod bench;
pub mod diffusion;
pub mod dsl;
pub mod envsim;
pub mod numerics;
pub mod par;
pub mod refine;
pub mod steering;
pub mod streams;
pub mod verifier;

pub use action::ActionProposal;
