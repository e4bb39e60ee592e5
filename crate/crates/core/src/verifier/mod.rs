//! Critic pipeline: turn a task context into a validated reward program and
//! judge executed actions afterwards.
//!
//! Two backends share one request shape. [`StubCritic`] answers from scene
//! ground truth and is a pure function of its inputs; [`RemoteCritic`] posts
//! the same requests as JSON to `/objective` and `/reflect`.

mod remote;
mod request;
mod stub;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{RemoteCritic, API_KEY_ENV};
pub use request::{
    Exchange, ExchangeKind, ObjectiveResponse, ReflectRequest, ReflectResponse, Stage, StageSection,
    SteeringRequest,
};
pub use stub::StubCritic;

use crate::action::ActionProposal;
use crate::dsl::{EvalScope, RewardProgram};
use crate::envsim::{keypoints, TaskContext};

/// Responses tried per call before giving up: the first plus two re-prompts.
pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticError {
    #[error("critic at {url} timed out after {after:?}")]
    Timeout { url: String, after: Duration },
    #[error("critic answered HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("critic transport error: {0}")]
    Transport(String),
    #[error("no usable program after {attempts} responses ({reason}); last response: {last_response:?}")]
    Unparseable {
        attempts: usize,
        reason: String,
        last_response: String,
    },
    #[error("invalid critic config: {0}")]
    Config(String),
    #[error("invalid critic request: {0}")]
    Request(String),
}

pub type Result<T, E = CriticError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriticBackend {
    Stub(StubCritic),
    Remote(RemoteCritic),
}

impl Default for CriticBackend {
    fn default() -> Self {
        CriticBackend::Stub(StubCritic::default())
    }
}

impl CriticBackend {
    pub fn is_stub(&self) -> bool {
        matches!(self, CriticBackend::Stub(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CriticBackend::Stub(_) => Ok(()),
            CriticBackend::Remote(r) => r.validate(),
        }
    }
}

/// Scope a program for `ctx` is checked against.
pub fn eval_scope(ctx: &TaskContext) -> Result<EvalScope> {
    crate::envsim::eval_scope(ctx).map_err(|e| CriticError::Request(e.to_string()))
}

fn check_program(text: &str, scope: &EvalScope) -> Result<RewardProgram, String> {
    let p = RewardProgram::parse(text).map_err(|e| e.to_string())?;
    p.validate(scope).map_err(|e| e.to_string())?;
    Ok(p)
}

pub(crate) fn parse_same(a: &str, b: &str) -> bool {
    match (crate::dsl::parse(a), crate::dsl::parse(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// A program together with the critic exchanges that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub program: RewardProgram,
    pub exchanges: Vec<Exchange>,
}

fn rejected(kind: ExchangeKind, response: String, error: String) -> Exchange {
    Exchange {
        kind,
        response,
        program: None,
        success: None,
        error: Some(error),
        rationale: String::new(),
    }
}

/// Ask the critic for a reward program for `ctx`, re-prompting with the
/// rejection reason when a response does not parse or type check.
pub fn reason_objective(
    ctx: &TaskContext,
    backend: &CriticBackend,
    history: &[Exchange],
) -> Result<Objective> {
    let scope = eval_scope(ctx)?;
    let mut seen = history.to_vec();
    let mut exchanges = Vec::new();
    let mut last = (String::new(), String::new());
    for _ in 0..MAX_ATTEMPTS {
        let mut req = SteeringRequest::new(ctx, &seen);
        req.validate().map_err(CriticError::Request)?;
        let answer = match backend {
            CriticBackend::Stub(s) => Ok(s.objective(ctx, &seen)),
            CriticBackend::Remote(r) => {
                req.temperature = Some(r.temperature);
                req.max_tokens = Some(r.max_tokens);
                let body = r.post("/objective", &req)?;
                serde_json::from_str::<ObjectiveResponse>(&body)
                    .map_err(|e| (body, format!("malformed response: {e}")))
            }
        };
        let ex = match answer {
            Ok(resp) => match check_program(&resp.reward_program, &scope) {
                Ok(program) => {
                    exchanges.push(Exchange {
                        kind: ExchangeKind::Objective,
                        program: Some(program.print()),
                        response: resp.reward_program,
                        success: None,
                        error: None,
                        rationale: resp.rationale,
                    });
                    return Ok(Objective { program, exchanges });
                }
                Err(e) => rejected(ExchangeKind::Objective, resp.reward_program, e),
            },
            Err((body, e)) => rejected(ExchangeKind::Objective, body, e),
        };
        last = (ex.response.clone(), ex.error.clone().unwrap_or_default());
        seen.push(ex.clone());
        exchanges.push(ex);
    }
    Err(CriticError::Unparseable {
        attempts: MAX_ATTEMPTS,
        reason: last.1,
        last_response: last.0,
    })
}

/// Post-execution judgement of one steering round.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionRecord {
    /// First proposal of the episode.
    pub a0: ActionProposal,
    /// Executed action.
    pub a_star: ActionProposal,
    /// Context after execution.
    pub post: TaskContext,
    /// History the critic saw.
    pub history: Vec<Exchange>,
    pub success: bool,
    pub revised: Option<RewardProgram>,
    pub rationale: String,
    /// Exchanges made by this call.
    pub exchanges: Vec<Exchange>,
}

/// Ask the critic whether executing `a_star` achieved the instruction and,
/// on failure, whether the reward itself should change.
pub fn reflect(
    a0: &ActionProposal,
    a_star: &ActionProposal,
    post: &TaskContext,
    history: &[Exchange],
    backend: &CriticBackend,
) -> Result<ReflectionRecord> {
    let scope = eval_scope(post)?;
    let mut seen = history.to_vec();
    let mut exchanges = Vec::new();
    let mut last = (String::new(), String::new());
    for _ in 0..MAX_ATTEMPTS {
        let answer = match backend {
            CriticBackend::Stub(s) => {
                let resp = s.reflect(post, &seen);
                let body = serde_json::to_string(&resp).expect("plain struct");
                Ok((resp, body))
            }
            CriticBackend::Remote(r) => {
                let req = ReflectRequest {
                    a0: a0.to_vec(),
                    a_star: a_star.to_vec(),
                    post_observation: post.observation().to_vec(),
                    keypoints: keypoints(post),
                    history: seen.clone(),
                    temperature: Some(r.temperature),
                    max_tokens: Some(r.max_tokens),
                };
                let body = r.post("/reflect", &req)?;
                match serde_json::from_str::<ReflectResponse>(&body) {
                    Ok(resp) => Ok((resp, body)),
                    Err(e) => Err((body, format!("malformed response: {e}"))),
                }
            }
        };
        let (resp, body) = match answer {
            Ok(x) => x,
            Err((body, e)) => {
                let ex = rejected(ExchangeKind::Reflect, body, e);
                last = (ex.response.clone(), ex.error.clone().unwrap_or_default());
                seen.push(ex.clone());
                exchanges.push(ex);
                continue;
            }
        };
        // a successful round needs no new reward
        let revised_text = resp.revised_program.filter(|_| !resp.success);
        let revised = match revised_text.as_deref().map(|t| check_program(t, &scope)) {
            None => None,
            Some(Ok(p)) => Some(p),
            Some(Err(e)) => {
                let ex = rejected(ExchangeKind::Reflect, body, e);
                last = (ex.response.clone(), ex.error.clone().unwrap_or_default());
                seen.push(ex.clone());
                exchanges.push(ex);
                continue;
            }
        };
        exchanges.push(Exchange {
            kind: ExchangeKind::Reflect,
            response: body,
            program: revised.as_ref().map(RewardProgram::print),
            success: Some(resp.success),
            error: None,
            rationale: resp.rationale.clone(),
        });
        return Ok(ReflectionRecord {
            a0: a0.clone(),
            a_star: a_star.clone(),
            post: post.clone(),
            history: history.to_vec(),
            success: resp.success,
            revised,
            rationale: resp.rationale,
            exchanges,
        });
    }
    Err(CriticError::Unparseable {
        attempts: MAX_ATTEMPTS,
        reason: last.1,
        last_response: last.0,
    })
}
