use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::envsim::{keypoints, TaskContext};

/// The four labelled sections every objective request carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    GoalConfirmation,
    ScenarioUnderstanding,
    EmbodiedAugmentation,
    ObjectiveGeneration,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::GoalConfirmation,
        Stage::ScenarioUnderstanding,
        Stage::EmbodiedAugmentation,
        Stage::ObjectiveGeneration,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSection {
    pub stage: Stage,
    pub content: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeKind {
    Objective,
    Reflect,
}

/// One critic call and its answer, as kept in the reasoning history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub kind: ExchangeKind,
    /// Raw response text (the program for objective calls, the response body
    /// for reflection calls).
    pub response: String,
    /// Program in force after this exchange, if it produced a valid one.
    pub program: Option<String>,
    /// Verdict of a reflection exchange.
    pub success: Option<bool>,
    /// Why the response was rejected, when it was.
    pub error: Option<String>,
    pub rationale: String,
}

impl Exchange {
    pub fn is_valid(&self) -> bool {
        self.error.is_none()
    }
}

/// Body of an objective request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringRequest {
    pub instruction: String,
    pub observation: Vec<f64>,
    pub keypoints: BTreeMap<String, [f64; 2]>,
    pub stages: Vec<StageSection>,
    pub history: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

fn fmt_point(p: &[f64; 2]) -> String {
    format!("({}, {})", p[0], p[1])
}

impl SteeringRequest {
    pub fn new(ctx: &TaskContext, history: &[Exchange]) -> Self {
        let kp = keypoints(ctx);
        let ins = ctx.instruction();
        let objects: Vec<String> = ctx
            .scene()
            .objects
            .iter()
            .map(|(k, p)| format!("{k} at {}", fmt_point(p)))
            .collect();
        let points: Vec<String> = kp
            .iter()
            .map(|(k, p)| format!("{k} = {}", fmt_point(p)))
            .collect();
        let stages = vec![
            StageSection {
                stage: Stage::GoalConfirmation,
                content: format!("Instruction: {}. Restate the goal in one sentence.", ins.text),
            },
            StageSection {
                stage: Stage::ScenarioUnderstanding,
                content: format!(
                    "Task {} in a 2D workspace [-{b}, {b}]^2 with {}.",
                    ins.task_id,
                    objects.join(", "),
                    b = crate::envsim::WORKSPACE_BOUND
                ),
            },
            StageSection {
                stage: Stage::EmbodiedAugmentation,
                content: format!("Keypoints: {}.", points.join(", ")),
            },
            StageSection {
                stage: Stage::ObjectiveGeneration,
                content: "Write one reward program, higher meaning better aligned. \
                          Bound names: action and the keypoints above."
                    .to_string(),
            },
        ];
        Self {
            instruction: ins.text.clone(),
            observation: ctx.observation().to_vec(),
            keypoints: kp,
            stages,
            history: history.to_vec(),
            temperature: None,
            max_tokens: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.instruction.trim().is_empty() {
            return Err("empty instruction".into());
        }
        if !self.keypoints.values().flatten().all(|v| v.is_finite()) {
            return Err("non-finite keypoint".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveResponse {
    pub reward_program: String,
    #[serde(default)]
    pub rationale: String,
}

/// Body of a reflection request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectRequest {
    pub a0: Vec<f64>,
    pub a_star: Vec<f64>,
    pub post_observation: Vec<f64>,
    pub keypoints: BTreeMap<String, [f64; 2]>,
    pub history: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectResponse {
    pub success: bool,
    #[serde(default)]
    pub revised_program: Option<String>,
    #[serde(default)]
    pub rationale: String,
}
