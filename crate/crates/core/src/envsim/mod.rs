//! Toy 2D manipulation scenes.
//!
//! A scene is a set of named points in the `[-2, 2]^2` workspace, an
//! end-effector start, and a success radius. Executing an action moves the
//! end effector to the action's position; success means landing within the
//! radius of the instructed target, and alignment means the instructed
//! target is the nearest goal. Demonstrations are drawn from an equal-weight
//! isotropic mixture over the scene's behaviour modes, independent of the
//! instruction, so a policy trained on them has no idea which mode a given
//! instruction wants.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionProposal;
use crate::diffusion::{Demo, Tensor, TensorFile, TensorHeader};
use crate::dsl::{DslError, EvalScope};
use crate::numerics::{dist, DiagGmm, RngStream};

pub const WORKSPACE_BOUND: f64 = 2.0;
pub const DEFAULT_SUCCESS_RADIUS: f64 = 0.15;
pub const DEMO_SIGMA: f64 = 0.1;
pub const EE_KEY: &str = "ee";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("unknown environment kind {0:?}")]
    UnknownKind(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
}

pub type Result<T, E = EnvError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvKind {
    TwoGoal,
    RingGoals {
        #[serde(default = "default_ring_modes")]
        modes: usize,
    },
    NarrowGap,
}

fn default_ring_modes() -> usize {
    4
}

impl EnvKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "two_goal" => Ok(EnvKind::TwoGoal),
            "ring_goals" => Ok(EnvKind::RingGoals { modes: 4 }),
            "narrow_gap" => Ok(EnvKind::NarrowGap),
            other => Err(EnvError::UnknownKind(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::TwoGoal => "two_goal",
            EnvKind::RingGoals { .. } => "ring_goals",
            EnvKind::NarrowGap => "narrow_gap",
        }
    }
}

/// Static layout of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub kind: EnvKind,
    /// Named object positions, ordered by name.
    pub objects: BTreeMap<String, [f64; 2]>,
    /// Objects that count as goals for the alignment judgment.
    pub goals: Vec<String>,
    /// Objects an instruction may designate as its target.
    pub targets: Vec<String>,
    pub ee_start: [f64; 2],
    pub success_radius: f64,
    pub demo_modes: Vec<[f64; 2]>,
    pub demo_sigma: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let inside = |p: &[f64; 2]| p.iter().all(|v| v.abs() <= WORKSPACE_BOUND);
        if !(self.success_radius > 0.0) {
            return Err(EnvError::InvalidScene("success radius must be positive".into()));
        }
        if !self.objects.values().all(inside) || !inside(&self.ee_start) {
            return Err(EnvError::InvalidScene("position outside workspace".into()));
        }
        if self.demo_modes.is_empty() || !(self.demo_sigma > 0.0) {
            return Err(EnvError::InvalidScene(
                "demo mixture needs modes and positive sigma".into(),
            ));
        }
        if self.objects.contains_key(EE_KEY) {
            return Err(EnvError::InvalidScene(format!(
                "object name {EE_KEY:?} is reserved"
            )));
        }
        for name in self.goals.iter().chain(&self.targets) {
            if !self.objects.contains_key(name) {
                return Err(EnvError::UnknownTarget(name.clone()));
            }
        }
        if self.targets.iter().any(|t| !self.goals.contains(t)) {
            return Err(EnvError::InvalidScene("every target must be a goal".into()));
        }
        // success implies alignment only if success balls cannot reach the
        // nearest-goal boundary
        let mut min_gap = f64::INFINITY;
        for (i, a) in self.goals.iter().enumerate() {
            for b in &self.goals[i + 1..] {
                min_gap = min_gap.min(dist(&self.objects[a], &self.objects[b]));
            }
        }
        if self.success_radius >= 0.5 * min_gap {
            return Err(EnvError::InvalidScene(format!(
                "success radius {} not below half the minimum goal gap {min_gap}",
                self.success_radius
            )));
        }
        Ok(())
    }

    pub fn position(&self, name: &str) -> Result<[f64; 2]> {
        self.objects
            .get(name)
            .copied()
            .ok_or_else(|| EnvError::UnknownTarget(name.to_string()))
    }

    pub fn demo_gmm(&self) -> DiagGmm {
        DiagGmm::isotropic(
            self.demo_modes.iter().map(|m| m.to_vec()).collect(),
            self.demo_sigma,
        )
        .expect("validated scene")
    }

    /// Length of the observation vector: every object plus the end effector.
    pub fn observation_dim(&self) -> usize {
        2 * self.objects.len() + 2
    }

    pub fn instruction_for(&self, target: &str) -> Result<Instruction> {
        if !self.targets.iter().any(|t| t == target) {
            return Err(EnvError::UnknownTarget(target.to_string()));
        }
        let text = match (self.kind, target) {
            (EnvKind::TwoGoal, "goal_left") => "reach the left goal".to_string(),
            (EnvKind::TwoGoal, "goal_right") => "reach the right goal".to_string(),
            (EnvKind::NarrowGap, _) => "place the tool in the gap between the ledges".to_string(),
            (_, t) => format!("reach {}", t.replace('_', " ")),
        };
        Ok(Instruction {
            task_id: self.kind.name().to_string(),
            target: target.to_string(),
            text,
        })
    }
}

/// Which task to do and where; the language side of the context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub task_id: String,
    pub target: String,
    pub text: String,
}

/// Observation plus instruction for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskContext {
    scene: Arc<Scene>,
    instruction: Instruction,
    ee: [f64; 2],
    observation: Vec<f64>,
}

impl TaskContext {
    pub fn new(scene: Arc<Scene>, instruction: Instruction, ee: [f64; 2]) -> Result<Self> {
        scene.position(&instruction.target)?;
        let mut observation = Vec::with_capacity(scene.observation_dim());
        for p in scene.objects.values() {
            observation.extend_from_slice(p);
        }
        observation.extend_from_slice(&ee);
        Ok(Self {
            scene,
            instruction,
            ee,
            observation,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn scene_arc(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn instruction(&self) -> &Instruction {
        &self.instruction
    }

    pub fn ee(&self) -> [f64; 2] {
        self.ee
    }

    /// Flattened object positions (name order) followed by the end effector.
    pub fn observation(&self) -> &[f64] {
        &self.observation
    }

    pub fn target_position(&self) -> [f64; 2] {
        self.scene.objects[&self.instruction.target]
    }

    /// Same scene and instruction with the end effector moved.
    pub fn with_ee(&self, ee: [f64; 2]) -> Self {
        Self::new(self.scene.clone(), self.instruction.clone(), ee).expect("target already checked")
    }
}

/// Named 2D points visible to the critic and to reward programs: every object
/// plus `"ee"`, in name order.
pub fn keypoints(ctx: &TaskContext) -> BTreeMap<String, [f64; 2]> {
    let mut out = ctx.scene().objects.clone();
    out.insert(EE_KEY.to_string(), ctx.ee());
    out
}

/// Bindings for reward programs in `ctx`: every keypoint by name, plus the
/// action slot (holding the end-effector position until a candidate is
/// substituted).
pub fn eval_scope(ctx: &TaskContext) -> Result<EvalScope, DslError> {
    let mut scope = EvalScope::new(&ctx.ee())?;
    for (name, p) in keypoints(ctx) {
        scope = scope.with_vector(&name, &p)?;
    }
    Ok(scope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub executed: ActionProposal,
    pub post: TaskContext,
    pub success: bool,
    pub aligned: bool,
    pub out_of_bounds: bool,
    pub distance: f64,
}

/// Move the end effector to `a` and judge the result.
///
/// Out-of-workspace actions are flagged, never clipped, and count as neither
/// successful nor aligned.
pub fn execute(ctx: &TaskContext, a: &ActionProposal) -> EpisodeOutcome {
    let pos = [
        a.first().copied().unwrap_or(f64::NAN),
        a.get(1).copied().unwrap_or(f64::NAN),
    ];
    let finite = a.dim() == 2 && a.is_finite();
    let out_of_bounds = !finite || pos.iter().any(|v| v.abs() > WORKSPACE_BOUND);
    let target = ctx.target_position();
    let distance = if finite {
        dist(&pos, &target)
    } else {
        f64::INFINITY
    };
    let scene = ctx.scene();
    let aligned = !out_of_bounds
        && scene
            .goals
            .iter()
            .all(|g| distance <= dist(&pos, &scene.objects[g]));
    let success = !out_of_bounds && distance <= scene.success_radius;
    let post = if out_of_bounds {
        ctx.clone()
    } else {
        ctx.with_ee(pos)
    };
    EpisodeOutcome {
        executed: a.clone(),
        post,
        success,
        aligned,
        out_of_bounds,
        distance,
    }
}

/// A scene plus its demonstration source.
#[derive(Debug, Clone)]
pub struct Env {
    scene: Arc<Scene>,
    gmm: DiagGmm,
    seed: u64,
}

pub fn make_env(kind: EnvKind, seed: u64) -> Result<Env> {
    let scene = match kind {
        EnvKind::TwoGoal => {
            let objects = BTreeMap::from([
                ("goal_left".to_string(), [-1.0, 0.0]),
                ("goal_right".to_string(), [1.0, 0.0]),
            ]);
            Scene {
                kind,
                goals: vec!["goal_left".into(), "goal_right".into()],
                targets: vec!["goal_left".into(), "goal_right".into()],
                ee_start: [0.0, -1.5],
                success_radius: DEFAULT_SUCCESS_RADIUS,
                demo_modes: vec![[-1.0, 0.0], [1.0, 0.0]],
                demo_sigma: DEMO_SIGMA,
                objects,
            }
        }
        EnvKind::RingGoals { modes } => {
            if modes < 2 {
                return Err(EnvError::InvalidScene("ring needs at least two modes".into()));
            }
            let points: Vec<[f64; 2]> = (0..modes)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / modes as f64;
                    [th.cos(), th.sin()]
                })
                .collect();
            let names: Vec<String> = (0..modes).map(|i| format!("goal_{i}")).collect();
            Scene {
                kind,
                objects: names.iter().cloned().zip(points.iter().copied()).collect(),
                goals: names.clone(),
                targets: names,
                ee_start: [0.0, 0.0],
                success_radius: DEFAULT_SUCCESS_RADIUS,
                demo_modes: points,
                demo_sigma: DEMO_SIGMA,
            }
        }
        EnvKind::NarrowGap => {
            let objects = BTreeMap::from([
                ("gap_goal".to_string(), [0.0, 0.5]),
                ("ledge_left".to_string(), [-1.0, 0.0]),
                ("ledge_right".to_string(), [1.0, 0.0]),
            ]);
            Scene {
                kind,
                goals: vec!["gap_goal".into(), "ledge_left".into(), "ledge_right".into()],
                targets: vec!["gap_goal".into()],
                ee_start: [0.0, -1.5],
                success_radius: DEFAULT_SUCCESS_RADIUS,
                demo_modes: vec![[-1.0, 0.0], [1.0, 0.0]],
                demo_sigma: DEMO_SIGMA,
                objects,
            }
        }
    };
    Env::new(scene, seed)
}

impl Env {
    pub fn new(scene: Scene, seed: u64) -> Result<Self> {
        scene.validate()?;
        let gmm = scene.demo_gmm();
        Ok(Self {
            scene: Arc::new(scene),
            gmm,
            seed,
        })
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn kind(&self) -> EnvKind {
        self.scene.kind
    }

    pub fn demo_gmm(&self) -> &DiagGmm {
        &self.gmm
    }

    pub fn targets(&self) -> &[String] {
        &self.scene.targets
    }

    /// Initial context for an instruction designating `target`.
    pub fn context(&self, target: &str) -> Result<TaskContext> {
        let instruction = self.scene.instruction_for(target)?;
        TaskContext::new(self.scene.clone(), instruction, self.scene.ee_start)
    }

    /// Deterministic target choice for episode `index`.
    pub fn episode_context(&self, episode_seed: u64) -> TaskContext {
        let mut rng = RngStream::tagged(episode_seed, &[crate::streams::TARGET]);
        let t = &self.scene.targets[rng.below(self.scene.targets.len())];
        self.context(t).expect("targets come from the scene")
    }

    /// `n` demonstrations from the declared mixture, paired with the initial
    /// observation.
    pub fn demos(&self, n: usize) -> Vec<Demo> {
        let mut rng = RngStream::tagged(self.seed, &[crate::streams::DEMOS]);
        let ctx = self.context(&self.scene.targets[0]).expect("validated scene");
        (0..n)
            .map(|_| Demo {
                context: ctx.observation().to_vec(),
                action: ActionProposal(self.gmm.sample(&mut rng)),
            })
            .collect()
    }
}

/// Pack demonstrations into the checkpoint tensor container.
pub fn demos_to_tensor_file(demos: &[Demo]) -> TensorFile {
    let n = demos.len() as u32;
    let (adim, cdim) = demos
        .first()
        .map(|d| (d.action.dim() as u32, d.context.len() as u32))
        .unwrap_or((0, 0));
    TensorFile {
        header: TensorHeader {
            action_dim: adim,
            context_dim: cdim,
            steps: 0,
            beta_start: 0.0,
            beta_end: 0.0,
        },
        tensors: vec![
            Tensor::new(
                "demos.context",
                vec![n, cdim],
                demos.iter().flat_map(|d| d.context.iter().copied()).collect(),
            ),
            Tensor::new(
                "demos.action",
                vec![n, adim],
                demos.iter().flat_map(|d| d.action.iter().copied()).collect(),
            ),
        ],
    }
}

pub fn demos_from_tensor_file(file: &TensorFile) -> crate::diffusion::Result<Vec<Demo>> {
    let (adim, cdim) = (file.header.action_dim as usize, file.header.context_dim as usize);
    let ctx = &file.get("demos.context")?.data;
    let act = &file.get("demos.action")?.data;
    if adim == 0 {
        return Ok(Vec::new());
    }
    let n = act.len() / adim;
    if act.len() != n * adim || ctx.len() != n * cdim {
        return Err(crate::diffusion::DiffusionError::Checkpoint(
            "demo tensor sizes disagree".into(),
        ));
    }
    Ok((0..n)
        .map(|i| Demo {
            context: ctx[i * cdim..(i + 1) * cdim].to_vec(),
            action: ActionProposal(act[i * adim..(i + 1) * adim].to_vec()),
        })
        .collect())
}

#[cfg(test)]
mod tests;
