use serde::{Deserialize, Serialize};

use super::request::{Exchange, ObjectiveResponse, ReflectResponse};
use crate::envsim::TaskContext;

/// Deterministic critic backed by scene ground truth.
///
/// With `wrong_rounds = r` the first `r` objectives it writes point at a
/// goal other than the instructed one; reflection then detects the mismatch
/// and revises the program.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubCritic {
    #[serde(default)]
    pub wrong_rounds: usize,
}

pub(crate) fn program_for(goal: &str) -> String {
    format!("neg(dist(action, {goal}))")
}

fn wrong_goal(ctx: &TaskContext) -> &str {
    let scene = ctx.scene();
    let target = &ctx.instruction().target;
    let goals = &scene.goals;
    match goals.iter().position(|g| g == target) {
        Some(i) => &goals[(i + 1) % goals.len()],
        None => &goals[0],
    }
}

fn programs_written(history: &[Exchange]) -> usize {
    history.iter().filter(|e| e.program.is_some()).count()
}

fn current_program(history: &[Exchange]) -> Option<&str> {
    history.iter().rev().find_map(|e| e.program.as_deref())
}

impl StubCritic {
    pub fn correct() -> Self {
        Self { wrong_rounds: 0 }
    }

    pub fn wrong_first(rounds: usize) -> Self {
        Self { wrong_rounds: rounds }
    }

    fn objective_for(&self, ctx: &TaskContext, history: &[Exchange]) -> (String, &'static str) {
        if programs_written(history) < self.wrong_rounds {
            (program_for(wrong_goal(ctx)), "scripted mis-specification")
        } else {
            (
                program_for(&ctx.instruction().target),
                "distance to the instructed goal",
            )
        }
    }

    pub fn objective(&self, ctx: &TaskContext, history: &[Exchange]) -> ObjectiveResponse {
        let (reward_program, why) = self.objective_for(ctx, history);
        ObjectiveResponse {
            reward_program,
            rationale: why.to_string(),
        }
    }

    /// Judge the post-execution context. `post` carries the executed action
    /// as its end-effector position.
    pub fn reflect(&self, post: &TaskContext, history: &[Exchange]) -> ReflectResponse {
        let target = post.target_position();
        let ee = post.ee();
        let d = crate::numerics::dist(&ee, &target);
        let success = d <= post.scene().success_radius;
        if success {
            return ReflectResponse {
                success,
                revised_program: None,
                rationale: format!("end effector within {d:.4} of the goal"),
            };
        }
        let correct = program_for(&post.instruction().target);
        let consistent = current_program(history).is_some_and(|p| super::parse_same(p, &correct));
        if consistent {
            ReflectResponse {
                success,
                revised_program: None,
                rationale: format!("reward is consistent; action missed by {d:.4}"),
            }
        } else {
            ReflectResponse {
                success,
                revised_program: Some(self.objective_for(post, history).0),
                rationale: "reward targets the wrong object".to_string(),
            }
        }
    }
}
