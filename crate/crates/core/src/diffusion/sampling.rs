use super::model::Scratch;
use super::{DenoiserModel, DiffusionError, NoiseSchedule, Result};
use crate::action::ActionProposal;
use crate::numerics::{all_finite, RngStream};

/// `sqrt(alpha_bar) * a + sqrt(1 - alpha_bar) * eps`.
///
/// With `alpha_bar == 1` this returns `a` unchanged.
pub fn forward_noise_with(a: &[f64], alpha_bar: f64, eps: &[f64]) -> Vec<f64> {
    let (s, r) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    a.iter().zip(eps).map(|(x, e)| s * x + r * e).collect()
}

/// Noise `a` straight to step `n` using the closed-form marginal
/// `q(x_n | x_0)`; draws `a.len()` normals from `rng`.
pub fn forward_noise(a: &[f64], n: usize, schedule: &NoiseSchedule, rng: &mut RngStream) -> Result<Vec<f64>> {
    schedule.check_step(n)?;
    if a.is_empty() {
        return Err(DiffusionError::Dim {
            what: "action",
            expected: 1,
            got: 0,
        });
    }
    let eps = rng.gauss(a.len());
    Ok(forward_noise_with(a, schedule.alpha_bar(n), &eps))
}

/// One ancestral transition `x_t -> x_{t-1}` with variance `beta_t`.
/// No noise is added on the final transition (`t == 1`).
pub fn reverse_step(
    model: &DenoiserModel,
    x: &mut [f64],
    t: usize,
    ctx: &[f64],
    rng: &mut RngStream,
) -> Result<()> {
    let mut scratch = Scratch::default();
    reverse_step_scratch(model, x, t, ctx, rng, &mut scratch)
}

fn reverse_step_scratch(
    model: &DenoiserModel,
    x: &mut [f64],
    t: usize,
    ctx: &[f64],
    rng: &mut RngStream,
    scratch: &mut Scratch,
) -> Result<()> {
    let s = model.schedule();
    let (beta, alpha, alpha_bar) = (s.beta(t), s.alpha(t), s.alpha_bar(t));
    let coef = beta / (1.0 - alpha_bar).sqrt();
    let inv_sqrt_alpha = 1.0 / alpha.sqrt();
    let eps = model.predict_noise_scratch(x, t, ctx, scratch)?;
    for (xi, e) in x.iter_mut().zip(eps) {
        *xi = inv_sqrt_alpha * (*xi - coef * e);
    }
    if t > 1 {
        let sigma = beta.sqrt();
        let z = rng.gauss(x.len());
        for (xi, z) in x.iter_mut().zip(z) {
            *xi += sigma * z;
        }
    }
    Ok(())
}

/// Run the reverse chain from step `n` down to a clean action.
pub fn denoise_from(
    model: &DenoiserModel,
    noised: &[f64],
    n: usize,
    ctx: &[f64],
    rng: &mut RngStream,
) -> Result<ActionProposal> {
    model.schedule().check_step(n)?;
    model.check_action(noised)?;
    model.check_context(ctx)?;
    if !all_finite(noised) {
        return Err(DiffusionError::NonFinite("noised action"));
    }
    let mut x = noised.to_vec();
    let mut scratch = Scratch::default();
    for t in (1..=n).rev() {
        reverse_step_scratch(model, &mut x, t, ctx, rng, &mut scratch)?;
    }
    if !all_finite(&x) {
        return Err(DiffusionError::NonFinite("denoised action"));
    }
    Ok(ActionProposal(x))
}

/// Full ancestral sampling: `x_T ~ N(0, I)` followed by all `T` reverse steps.
pub fn sample(model: &DenoiserModel, ctx: &[f64], rng: &mut RngStream) -> Result<ActionProposal> {
    model.check_context(ctx)?;
    let x = rng.gauss(model.action_dim());
    denoise_from(model, &x, model.steps(), ctx, rng)
}
