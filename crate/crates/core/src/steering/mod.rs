//! Evolutionary search over action proposals with the frozen policy as the
//! mutation operator.
//!
//! One call to [`steer`] samples `m` proposals, then `k` times scores them,
//! resamples `m` elites with replacement under `softmax(tau * score)` and
//! mutates every elite by noising it `n` steps and denoising it back. The
//! returned action is the best member of the last generation (lowest index
//! on ties). With `k = 0` this is plain best-of-`m` selection.
//!
//! Randomness is drawn from per-member streams keyed by
//! `(seed, purpose, generation, member)`, so results are identical with or
//! without threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionProposal;
use crate::diffusion::{denoise_from, forward_noise, sample, DenoiserModel, DiffusionError};
use crate::dsl::{DslError, EvalScope, RewardProgram};
use crate::envsim::{eval_scope, TaskContext};
use crate::numerics::{softmax, NumericsError, RngStream};
use crate::par::{try_map_indexed, Parallelism};
use crate::streams;

#[derive(Debug, Error)]
pub enum SteeringError {
    #[error("invalid steering config: {0}")]
    Config(String),
    #[error("reward program rejected: {0}")]
    Program(DslError),
    #[error("scoring member {member} failed: {source}")]
    Score { member: usize, source: DslError },
    #[error("population has not been scored")]
    Unscored,
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T, E = SteeringError> = std::result::Result<T, E>;

fn default_m() -> usize {
    32
}
fn default_k() -> usize {
    10
}
fn default_tau() -> f64 {
    5.0
}
fn default_n() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringConfig {
    /// Population size.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Generations of select-and-mutate.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Selection temperature multiplier; 0 selects uniformly.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Truncation depth of the diffuse-denoise mutation.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Keep every generation in the result.
    #[serde(default)]
    pub keep_populations: bool,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        Self {
            m: default_m(),
            k: default_k(),
            tau: default_tau(),
            n: default_n(),
            seed: 0,
            keep_populations: false,
            parallelism: Parallelism::default(),
        }
    }
}

impl SteeringConfig {
    pub fn validate(&self, steps: usize) -> Result<()> {
        if self.m == 0 {
            return Err(SteeringError::Config("m must be at least 1".into()));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(SteeringError::Config(format!(
                "tau {} must be finite and >= 0",
                self.tau
            )));
        }
        if self.n == 0 || self.n > steps {
            return Err(SteeringError::Config(format!(
                "n {} must lie in 1..={steps}",
                self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub generation: usize,
    pub members: Vec<ActionProposal>,
    /// Empty until scored.
    pub scores: Vec<f64>,
    /// Index in the previous generation each member descends from.
    pub parents: Option<Vec<usize>>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_scored(&self) -> bool {
        !self.members.is_empty() && self.scores.len() == self.members.len()
    }

    /// Index of the highest score, lowest index on ties.
    pub fn argmax(&self) -> Result<usize> {
        if !self.is_scored() {
            return Err(SteeringError::Unscored);
        }
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate().skip(1) {
            if s > self.scores[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn stats(&self) -> Result<GenerationStats> {
        let best = self.argmax()?;
        Ok(GenerationStats {
            generation: self.generation,
            best: self.scores[best],
            mean: self.scores.iter().sum::<f64>() / self.scores.len() as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

/// Best member seen in any generation. Diagnostic only; the returned action
/// always comes from the last generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub generation: usize,
    pub score: f64,
    pub action: ActionProposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub a_star: ActionProposal,
    pub best_score: f64,
    pub best_index: usize,
    /// First member of the initial population.
    pub a0: ActionProposal,
    /// One entry per generation, `k + 1` in total.
    pub trace: Vec<GenerationStats>,
    pub incumbent: Incumbent,
    pub populations: Option<Vec<Population>>,
    /// Seed every stream of this call was derived from.
    pub seed: u64,
    pub evaluations: usize,
}

/// `m` independent policy samples, member `i` drawing from its own stream.
pub fn propose(
    model: &DenoiserModel,
    obs: &[f64],
    m: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<Population> {
    if m == 0 {
        return Err(SteeringError::Config("m must be at least 1".into()));
    }
    let members = try_map_indexed(m, mode, |i| {
        let mut rng = RngStream::tagged(seed, &[streams::PROPOSE, i as u64]);
        sample(model, obs, &mut rng)
    })?;
    Ok(Population {
        generation: 0,
        members,
        scores: Vec::new(),
        parents: None,
    })
}

/// Fill in scores. Each member is scored independently against `scope`
/// with its own action substituted.
pub fn score(pop: &mut Population, prog: &RewardProgram, scope: &EvalScope, mode: Parallelism) -> Result<()> {
    let members = &pop.members;
    pop.scores = try_map_indexed(members.len(), mode, |i| {
        prog.evaluate_action(scope, &members[i])
            .map_err(|source| SteeringError::Score { member: i, source })
    })?;
    Ok(())
}

/// Draw `pop.len()` elite indices i.i.d. from `softmax(scores, tau)`.
pub fn select_elites(pop: &Population, tau: f64, rng: &mut RngStream) -> Result<Vec<usize>> {
    if !pop.is_scored() {
        return Err(SteeringError::Unscored);
    }
    let q = softmax(&pop.scores, tau)?;
    let dist = WeightedIndex::new(&q).map_err(|e| NumericsError::Invalid(e.to_string()))?;
    Ok((0..pop.len()).map(|_| dist.sample(rng)).collect())
}

/// Next generation: every elite noised to step `n` and denoised back.
#[allow(clippy::too_many_arguments)]
pub fn mutate(
    pop: &Population,
    elites: &[usize],
    model: &DenoiserModel,
    obs: &[f64],
    n: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<Population> {
    if elites.is_empty() {
        return Err(SteeringError::Config("no elites to mutate".into()));
    }
    let generation = pop.generation + 1;
    let members = try_map_indexed(elites.len(), mode, |i| {
        let tags = [streams::MUTATE, generation as u64, i as u64];
        let mut rng = RngStream::tagged(seed, &tags);
        let noised = forward_noise(&pop.members[elites[i]], n, model.schedule(), &mut rng)?;
        denoise_from(model, &noised, n, obs, &mut rng)
    })?;
    Ok(Population {
        generation,
        members,
        scores: Vec::new(),
        parents: Some(elites.to_vec()),
    })
}

/// Full search for one decision.
pub fn steer(
    model: &DenoiserModel,
    ctx: &TaskContext,
    prog: &RewardProgram,
    cfg: &SteeringConfig,
) -> Result<SteeringResult> {
    cfg.validate(model.steps())?;
    let scope = eval_scope(ctx).map_err(SteeringError::Program)?;
    prog.validate(&scope).map_err(SteeringError::Program)?;
    let obs = ctx.observation();
    let mode = cfg.parallelism;

    let mut pop = propose(model, obs, cfg.m, cfg.seed, mode)?;
    score(&mut pop, prog, &scope, mode)?;
    let a0 = pop.members[0].clone();
    let mut trace = vec![pop.stats()?];
    let mut incumbent = incumbent_of(&pop)?;
    let mut kept = cfg.keep_populations.then(Vec::new);

    for k in 0..cfg.k {
        let mut rng = RngStream::tagged(cfg.seed, &[streams::SELECT, k as u64]);
        let elites = select_elites(&pop, cfg.tau, &mut rng)?;
        let mut next = mutate(&pop, &elites, model, obs, cfg.n, cfg.seed, mode)?;
        score(&mut next, prog, &scope, mode)?;
        trace.push(next.stats()?);
        let inc = incumbent_of(&next)?;
        if inc.score > incumbent.score {
            incumbent = inc;
        }
        if let Some(kept) = kept.as_mut() {
            kept.push(std::mem::replace(&mut pop, next));
        } else {
            pop = next;
        }
    }

    let best_index = pop.argmax()?;
    let result = SteeringResult {
        a_star: pop.members[best_index].clone(),
        best_score: pop.scores[best_index],
        best_index,
        a0,
        trace,
        incumbent,
        populations: None,
        seed: cfg.seed,
        evaluations: cfg.m * (cfg.k + 1),
    };
    Ok(SteeringResult {
        populations: kept.map(|mut v| {
            v.push(pop);
            v
        }),
        ..result
    })
}

fn incumbent_of(pop: &Population) -> Result<Incumbent> {
    let i = pop.argmax()?;
    Ok(Incumbent {
        generation: pop.generation,
        score: pop.scores[i],
        action: pop.members[i].clone(),
    })
}
