use serde::{Deserialize, Serialize};

use super::{DiffusionError, NoiseSchedule, Result};
use crate::numerics::{Activation, ForwardCache, Mlp, RngStream};

/// Shape of the noise-prediction network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserArch {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Width of the sinusoidal step embedding; must be even.
    pub embed_width: usize,
}

impl Default for DenoiserArch {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 64],
            activation: Activation::Relu,
            embed_width: 16,
        }
    }
}

/// Noise predictor `eps(x_t, t, c)` together with its schedule.
///
/// Input layout: `[x_t | context | embed(t)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserModel {
    mlp: Mlp,
    action_dim: usize,
    context_dim: usize,
    embed_width: usize,
    schedule: NoiseSchedule,
}

/// Reusable buffers for repeated noise predictions on one thread.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    pub(crate) input: Vec<f64>,
    pub(crate) cache: ForwardCache,
}

impl DenoiserModel {
    pub fn init(
        arch: &DenoiserArch,
        action_dim: usize,
        context_dim: usize,
        schedule: NoiseSchedule,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if action_dim == 0 || arch.embed_width == 0 || !arch.embed_width.is_multiple_of(2) {
            return Err(DiffusionError::Config(format!(
                "action_dim {action_dim}, embed_width {} (must be positive and even)",
                arch.embed_width
            )));
        }
        let mut sizes = vec![action_dim + context_dim + arch.embed_width];
        sizes.extend(&arch.hidden);
        sizes.push(action_dim);
        let mlp = Mlp::new(&sizes, arch.activation, rng)?;
        Ok(Self {
            mlp,
            action_dim,
            context_dim,
            embed_width: arch.embed_width,
            schedule,
        })
    }

    pub fn from_parts(
        mlp: Mlp,
        action_dim: usize,
        context_dim: usize,
        embed_width: usize,
        schedule: NoiseSchedule,
    ) -> Result<Self> {
        if mlp.input_dim() != action_dim + context_dim + embed_width {
            return Err(DiffusionError::Dim {
                what: "network input",
                expected: action_dim + context_dim + embed_width,
                got: mlp.input_dim(),
            });
        }
        if mlp.output_dim() != action_dim {
            return Err(DiffusionError::Dim {
                what: "network output",
                expected: action_dim,
                got: mlp.output_dim(),
            });
        }
        if embed_width == 0 || !embed_width.is_multiple_of(2) {
            return Err(DiffusionError::Config(format!("embed_width {embed_width}")));
        }
        Ok(Self {
            mlp,
            action_dim,
            context_dim,
            embed_width,
            schedule,
        })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub(crate) fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn embed_width(&self) -> usize {
        self.embed_width
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn steps(&self) -> usize {
        self.schedule.steps()
    }

    pub fn check_context(&self, ctx: &[f64]) -> Result<()> {
        if ctx.len() != self.context_dim {
            return Err(DiffusionError::Dim {
                what: "context",
                expected: self.context_dim,
                got: ctx.len(),
            });
        }
        Ok(())
    }

    pub fn check_action(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.action_dim {
            return Err(DiffusionError::Dim {
                what: "action",
                expected: self.action_dim,
                got: a.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn build_input(&self, x: &[f64], t: usize, ctx: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(x);
        out.extend_from_slice(ctx);
        let half = self.embed_width / 2;
        for i in 0..half {
            let freq = (-(MAX_PERIOD.ln()) * i as f64 / half as f64).exp();
            out.push((t as f64 * freq).sin());
        }
        for i in 0..half {
            let freq = (-(MAX_PERIOD.ln()) * i as f64 / half as f64).exp();
            out.push((t as f64 * freq).cos());
        }
    }

    pub(crate) fn predict_noise_scratch<'s>(
        &self,
        x: &[f64],
        t: usize,
        ctx: &[f64],
        scratch: &'s mut Scratch,
    ) -> Result<&'s [f64]> {
        self.build_input(x, t, ctx, &mut scratch.input);
        Ok(self.mlp.forward_cached(&scratch.input, &mut scratch.cache)?)
    }

    /// Predicted noise for `x` at diffusion step `t` (1-based).
    pub fn predict_noise(&self, x: &[f64], t: usize, ctx: &[f64]) -> Result<Vec<f64>> {
        self.check_action(x)?;
        self.check_context(ctx)?;
        self.schedule.check_step(t)?;
        let mut scratch = Scratch::default();
        Ok(self.predict_noise_scratch(x, t, ctx, &mut scratch)?.to_vec())
    }
}

const MAX_PERIOD: f64 = 100.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule() -> NoiseSchedule {
        NoiseSchedule::linear(10, 0.01, 0.2).unwrap()
    }

    #[test]
    fn layer_sizes_follow_dims() {
        let m = DenoiserModel::init(
            &DenoiserArch::default(),
            2,
            6,
            schedule(),
            &mut RngStream::new(1, 1),
        )
        .unwrap();
        assert_eq!(m.mlp().input_dim(), 2 + 6 + 16);
        assert_eq!(m.mlp().output_dim(), 2);
    }

    #[test]
    fn embedding_distinguishes_steps() {
        let m = DenoiserModel::init(
            &DenoiserArch::default(),
            2,
            0,
            schedule(),
            &mut RngStream::new(1, 1),
        )
        .unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        m.build_input(&[0.0, 0.0], 3, &[], &mut a);
        m.build_input(&[0.0, 0.0], 4, &[], &mut b);
        assert_eq!(a.len(), 18);
        assert_ne!(a, b);
    }

    #[test]
    fn odd_embedding_rejected() {
        let arch = DenoiserArch {
            embed_width: 5,
            ..Default::default()
        };
        assert!(DenoiserModel::init(&arch, 2, 0, schedule(), &mut RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn predict_checks_dims() {
        let m = DenoiserModel::init(
            &DenoiserArch::default(),
            2,
            3,
            schedule(),
            &mut RngStream::new(1, 1),
        )
        .unwrap();
        assert!(m.predict_noise(&[0.0, 0.0], 1, &[0.0; 2]).is_err());
        assert!(m.predict_noise(&[0.0], 1, &[0.0; 3]).is_err());
        assert!(m.predict_noise(&[0.0, 0.0], 11, &[0.0; 3]).is_err());
        assert_eq!(m.predict_noise(&[0.0, 0.0], 10, &[0.0; 3]).unwrap().len(), 2);
    }
}
