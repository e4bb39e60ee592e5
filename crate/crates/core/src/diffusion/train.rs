use serde::{Deserialize, Serialize};

use super::model::Scratch;
use super::{DenoiserArch, DenoiserModel, DiffusionError, NoiseSchedule, Result};
use crate::action::ActionProposal;
use crate::numerics::{Adam, RngStream};
use crate::streams;

/// One (context, action) demonstration pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demo {
    pub context: Vec<f64>,
    pub action: ActionProposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub arch: DenoiserArch,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 4000,
            batch_size: 64,
            learning_rate: 2e-3,
            seed: 0,
            arch: DenoiserArch::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(DiffusionError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(DiffusionError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: DenoiserModel,
    /// Mean batch loss over the final 100 steps (NaN when no steps ran).
    pub final_loss: f64,
    pub losses: Vec<f64>,
}

/// Fit a noise predictor with the standard DDPM objective: draw a demo, a
/// step `t ~ U{1..T}` and `eps ~ N(0, I)`, noise the action in closed form
/// and regress the prediction onto `eps` with squared loss.
///
/// The learning rate follows a cosine decay to a tenth of its initial value.
pub fn train_policy(demos: &[Demo], cfg: &TrainConfig, schedule: NoiseSchedule) -> Result<TrainOutcome> {
    let first = demos.first().ok_or(DiffusionError::EmptyDemos)?;
    cfg.validate()?;
    let (action_dim, context_dim) = (first.action.dim(), first.context.len());
    for d in demos {
        if d.action.dim() != action_dim || d.context.len() != context_dim {
            return Err(DiffusionError::Dim {
                what: "demonstration",
                expected: action_dim + context_dim,
                got: d.action.dim() + d.context.len(),
            });
        }
    }

    let mut init_rng = RngStream::tagged(cfg.seed, &[streams::INIT]);
    let mut model = DenoiserModel::init(&cfg.arch, action_dim, context_dim, schedule, &mut init_rng)?;
    let mut rng = RngStream::tagged(cfg.seed, &[streams::TRAIN]);
    let mut opt = Adam::new(model.mlp().param_count(), cfg.learning_rate);
    let mut grads = model.mlp().zero_grads();
    let mut scratch = Scratch::default();
    let mut losses = Vec::with_capacity(cfg.steps);
    let steps_total = model.steps();
    let scale = 1.0 / cfg.batch_size as f64;
    let mut x_t = vec![0.0; action_dim];
    let mut g_out = vec![0.0; action_dim];

    for step in 0..cfg.steps {
        grads.clear();
        let mut batch_loss = 0.0;
        for _ in 0..cfg.batch_size {
            let demo = &demos[rng.below(demos.len())];
            let t = 1 + rng.below(steps_total);
            let eps = rng.gauss(action_dim);
            let ab = model.schedule().alpha_bar(t);
            let (s, r) = (ab.sqrt(), (1.0 - ab).sqrt());
            for ((x, a), e) in x_t.iter_mut().zip(demo.action.iter()).zip(&eps) {
                *x = s * a + r * e;
            }
            let pred = model.predict_noise_scratch(&x_t, t, &demo.context, &mut scratch)?;
            for ((g, p), e) in g_out.iter_mut().zip(pred).zip(&eps) {
                let diff = p - e;
                batch_loss += diff * diff;
                *g = 2.0 * diff;
            }
            model
                .mlp()
                .backward_accumulate(&mut scratch.cache, &g_out, scale, &mut grads)?;
        }
        batch_loss *= scale;
        if !batch_loss.is_finite() {
            return Err(DiffusionError::NonFinite("training loss"));
        }
        losses.push(batch_loss);

        let progress = step as f64 / cfg.steps.max(1) as f64;
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        opt.set_lr(cfg.learning_rate * (0.1 + 0.9 * cosine));
        opt.step(model.mlp_mut().params_mut(), grads.slices())?;
    }

    let tail = &losses[losses.len().saturating_sub(100)..];
    let final_loss = if tail.is_empty() {
        f64::NAN
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    Ok(TrainOutcome {
        model,
        final_loss,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demos() -> Vec<Demo> {
        vec![
            Demo {
                context: vec![1.0],
                action: vec![0.5, 0.5].into(),
            };
            4
        ]
    }

    #[test]
    fn empty_demos_rejected() {
        let s = NoiseSchedule::linear(10, 0.01, 0.2).unwrap();
        assert!(matches!(
            train_policy(&[], &TrainConfig::default(), s),
            Err(DiffusionError::EmptyDemos)
        ));
    }

    #[test]
    fn inconsistent_demo_dims_rejected() {
        let s = NoiseSchedule::linear(10, 0.01, 0.2).unwrap();
        let mut d = demos();
        d[2].context.push(0.0);
        assert!(train_policy(&d, &TrainConfig::default(), s).is_err());
    }

    #[test]
    fn zero_steps_still_samples() {
        let s = NoiseSchedule::linear(10, 0.01, 0.2).unwrap();
        let cfg = TrainConfig {
            steps: 0,
            ..Default::default()
        };
        let out = train_policy(&demos(), &cfg, s).unwrap();
        assert!(out.final_loss.is_nan());
        let a = crate::diffusion::sample(&out.model, &[1.0], &mut RngStream::new(0, 0)).unwrap();
        assert!(a.is_finite());
    }

    #[test]
    fn training_is_deterministic() {
        let s = NoiseSchedule::linear(10, 0.01, 0.2).unwrap();
        let cfg = TrainConfig {
            steps: 20,
            batch_size: 8,
            ..Default::default()
        };
        let a = train_policy(&demos(), &cfg, s.clone()).unwrap();
        let b = train_policy(&demos(), &cfg, s).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.losses, b.losses);
    }
}
