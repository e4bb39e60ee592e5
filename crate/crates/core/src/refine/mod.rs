//! Closed-loop episodes: reason a reward, steer, execute, reflect, and retry
//! with the same or a revised reward until the critic accepts the result or
//! the round budget runs out.
//!
//! Episodes are single decisions: every round starts again from the initial
//! context, the failed attempt surviving only in the critic history.

use serde::{Deserialize, Serialize};

use crate::action::ActionProposal;
use crate::diffusion::DenoiserModel;
use crate::dsl::RewardProgram;
use crate::envsim::{execute, EnvKind, TaskContext};
use crate::numerics::stream_id;
use crate::steering::{steer, GenerationStats, SteeringConfig};
use crate::streams;
use crate::verifier::{
    self, CriticBackend, CriticError, Exchange, ExchangeKind, Objective, ReflectionRecord,
};

fn default_rounds() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    #[serde(default)]
    pub steering: SteeringConfig,
    #[serde(default)]
    pub critic: CriticBackend,
    pub env: EnvKind,
    #[serde(default)]
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(env: EnvKind, seed: u64) -> Self {
        Self {
            max_rounds: default_rounds(),
            steering: SteeringConfig::default(),
            critic: CriticBackend::default(),
            env,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_rounds == 0 {
            return Err("max_rounds must be at least 1".into());
        }
        self.critic.validate().map_err(|e| e.to_string())
    }
}

/// Seed of the steering call in `round` (1-based) of the episode seeded
/// with `episode_seed`.
pub fn round_seed(episode_seed: u64, round: usize) -> u64 {
    stream_id(&[streams::EPISODE, episode_seed, round as u64])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Success,
    BudgetExhausted,
    AbortedError,
}

/// Everything one round produced, flattened for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub program: String,
    pub steer_seed: u64,
    pub best_score: f64,
    pub trace: Vec<GenerationStats>,
    pub a0: ActionProposal,
    pub a_star: ActionProposal,
    pub success: bool,
    pub aligned: bool,
    pub out_of_bounds: bool,
    pub distance: f64,
    pub post_observation: Vec<f64>,
    pub verdict: bool,
    pub revised_program: Option<String>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub env: EnvKind,
    pub target: String,
    pub rounds: Vec<RoundRecord>,
    pub status: EpisodeStatus,
    pub abort_reason: Option<String>,
    /// Every critic exchange of the episode in order.
    pub history: Vec<Exchange>,
}

impl EpisodeTrace {
    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn last(&self) -> Option<&RoundRecord> {
        self.rounds.last()
    }

    /// Success of the last executed action.
    pub fn success(&self) -> bool {
        self.last().is_some_and(|r| r.success)
    }

    pub fn aligned(&self) -> bool {
        self.last().is_some_and(|r| r.aligned)
    }
}

/// Source of reward programs and verdicts for an episode.
pub trait Critic {
    fn objective(&self, ctx: &TaskContext, history: &[Exchange]) -> Result<Objective, CriticError>;

    fn reflect(
        &self,
        a0: &ActionProposal,
        a_star: &ActionProposal,
        post: &TaskContext,
        history: &[Exchange],
    ) -> Result<ReflectionRecord, CriticError>;
}

impl Critic for CriticBackend {
    fn objective(&self, ctx: &TaskContext, history: &[Exchange]) -> Result<Objective, CriticError> {
        verifier::reason_objective(ctx, self, history)
    }

    fn reflect(
        &self,
        a0: &ActionProposal,
        a_star: &ActionProposal,
        post: &TaskContext,
        history: &[Exchange],
    ) -> Result<ReflectionRecord, CriticError> {
        verifier::reflect(a0, a_star, post, history, self)
    }
}

/// Plays back the programs and verdicts of a recorded episode instead of
/// asking a critic.
#[derive(Debug, Clone)]
pub struct RecordedCritic {
    rounds: Vec<RoundRecord>,
}

impl RecordedCritic {
    pub fn new(trace: &EpisodeTrace) -> Self {
        Self {
            rounds: trace.rounds.clone(),
        }
    }

    fn round_index(history: &[Exchange]) -> usize {
        history
            .iter()
            .filter(|e| e.kind == ExchangeKind::Reflect && e.is_valid())
            .count()
    }

    fn missing(what: &str, round: usize) -> CriticError {
        CriticError::Request(format!("recorded trace has no {what} for round {}", round + 1))
    }
}

fn recorded_exchange(kind: ExchangeKind, program: Option<String>, success: Option<bool>) -> Exchange {
    Exchange {
        kind,
        response: program.clone().unwrap_or_default(),
        program,
        success,
        error: None,
        rationale: "recorded".into(),
    }
}

impl Critic for RecordedCritic {
    fn objective(&self, ctx: &TaskContext, history: &[Exchange]) -> Result<Objective, CriticError> {
        let i = Self::round_index(history);
        let r = self.rounds.get(i).ok_or_else(|| Self::missing("program", i))?;
        let program = RewardProgram::parse(&r.program).map_err(|e| CriticError::Request(e.to_string()))?;
        program
            .validate(&verifier::eval_scope(ctx)?)
            .map_err(|e| CriticError::Request(e.to_string()))?;
        let ex = recorded_exchange(ExchangeKind::Objective, Some(program.print()), None);
        Ok(Objective {
            program,
            exchanges: vec![ex],
        })
    }

    fn reflect(
        &self,
        a0: &ActionProposal,
        a_star: &ActionProposal,
        post: &TaskContext,
        history: &[Exchange],
    ) -> Result<ReflectionRecord, CriticError> {
        let i = Self::round_index(history);
        let r = self.rounds.get(i).ok_or_else(|| Self::missing("verdict", i))?;
        let revised = r
            .revised_program
            .as_deref()
            .map(RewardProgram::parse)
            .transpose()
            .map_err(|e| CriticError::Request(e.to_string()))?;
        let ex = recorded_exchange(
            ExchangeKind::Reflect,
            revised.as_ref().map(RewardProgram::print),
            Some(r.verdict),
        );
        Ok(ReflectionRecord {
            a0: a0.clone(),
            a_star: a_star.clone(),
            post: post.clone(),
            history: history.to_vec(),
            success: r.verdict,
            revised,
            rationale: r.rationale.clone(),
            exchanges: vec![ex],
        })
    }
}

/// Run one episode from the initial context `ctx`.
pub fn run_episode(
    model: &DenoiserModel,
    ctx: &TaskContext,
    cfg: &EpisodeConfig,
    critic: &dyn Critic,
) -> EpisodeTrace {
    let mut trace = EpisodeTrace {
        seed: cfg.seed,
        env: cfg.env,
        target: ctx.instruction().target.clone(),
        rounds: Vec::new(),
        status: EpisodeStatus::BudgetExhausted,
        abort_reason: None,
        history: Vec::new(),
    };
    let abort = |mut t: EpisodeTrace, why: String| {
        t.status = EpisodeStatus::AbortedError;
        t.abort_reason = Some(why);
        t
    };
    if let Err(e) = cfg.validate() {
        return abort(trace, e);
    }

    let mut program = match critic.objective(ctx, &trace.history) {
        Ok(obj) => {
            trace.history.extend(obj.exchanges);
            obj.program
        }
        Err(e) => return abort(trace, e.to_string()),
    };
    let mut a0 = None;

    for round in 1..=cfg.max_rounds {
        let steering = SteeringConfig {
            seed: round_seed(cfg.seed, round),
            ..cfg.steering.clone()
        };
        let res = match steer(model, ctx, &program, &steering) {
            Ok(r) => r,
            Err(e) => return abort(trace, e.to_string()),
        };
        let a0 = a0.get_or_insert_with(|| res.a0.clone()).clone();
        let outcome = execute(ctx, &res.a_star);
        let refl = match critic.reflect(&a0, &res.a_star, &outcome.post, &trace.history) {
            Ok(r) => r,
            Err(e) => return abort(trace, e.to_string()),
        };
        trace.history.extend(refl.exchanges.iter().cloned());
        trace.rounds.push(RoundRecord {
            round,
            program: program.print(),
            steer_seed: steering.seed,
            best_score: res.best_score,
            trace: res.trace,
            a0,
            a_star: res.a_star,
            success: outcome.success,
            aligned: outcome.aligned,
            out_of_bounds: outcome.out_of_bounds,
            distance: outcome.distance,
            post_observation: outcome.post.observation().to_vec(),
            verdict: refl.success,
            revised_program: refl.revised.as_ref().map(RewardProgram::print),
            rationale: refl.rationale,
        });
        if refl.success {
            break;
        }
        if let Some(p) = refl.revised {
            program = p;
        }
    }
    trace.status = if trace.success() {
        EpisodeStatus::Success
    } else {
        EpisodeStatus::BudgetExhausted
    };
    trace
}
