use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::diffusion::{NoiseSchedule, TrainConfig};
use crate::envsim::{EnvKind, Scene};
use crate::steering::SteeringConfig;
use crate::verifier::CriticBackend;

/// Version of the config and trace formats this build reads and writes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            steps: 50,
            beta_start: 1e-4,
            beta_end: 0.1,
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<NoiseSchedule> {
        Ok(NoiseSchedule::linear(self.steps, self.beta_start, self.beta_end)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// One policy sample, executed as is.
    Frozen,
    /// Best of `m` policy samples.
    Selection,
    /// Full evolutionary search.
    Evolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
    /// Allow reflection-driven retries up to `max_rounds`.
    #[serde(default)]
    pub refine: bool,
    /// Generation count override for evolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl MethodSpec {
    pub fn new(name: &str, kind: MethodKind, refine: bool) -> Self {
        Self {
            name: name.to_string(),
            kind,
            refine,
            k: None,
        }
    }

    /// Steering parameters this method runs with.
    pub fn steering(&self, base: &SteeringConfig) -> SteeringConfig {
        let mut s = base.clone();
        match self.kind {
            MethodKind::Frozen => {
                s.m = 1;
                s.k = 0;
            }
            MethodKind::Selection => s.k = 0,
            MethodKind::Evolution => s.k = self.k.unwrap_or(base.k),
        }
        s
    }
}

pub fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::new("frozen", MethodKind::Frozen, false),
        MethodSpec::new("selection", MethodKind::Selection, false),
        MethodSpec::new("evolution", MethodKind::Evolution, false),
        MethodSpec::new("evolution+refine", MethodKind::Evolution, true),
    ]
}

fn default_format() -> u32 {
    FORMAT_VERSION
}
fn default_demos() -> usize {
    4096
}
fn default_episodes() -> usize {
    100
}
fn default_rounds() -> usize {
    3
}
fn default_checkpoint() -> PathBuf {
    PathBuf::from("policy.evst")
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything needed to train a policy and benchmark methods on one
/// environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_format")]
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub env: EnvKind,
    /// Full scene replacing the built-in one for `env`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    #[serde(default = "default_demos")]
    pub demos: usize,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub steering: SteeringConfig,
    #[serde(default)]
    pub critic: CriticBackend,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    /// Policy checkpoint; relative paths are taken from `out_dir`.
    #[serde(default = "default_checkpoint")]
    pub checkpoint: PathBuf,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(env: EnvKind) -> Self {
        serde_json::from_value(serde_json::json!({ "env": serde_json::to_value(env).unwrap() }))
            .expect("defaults are complete")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            BenchError::Schema {
                field: path,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |field: &str, message: String| BenchError::Schema {
            field: field.to_string(),
            message,
        };
        if self.format_version != FORMAT_VERSION {
            return Err(BenchError::Version {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if self.episodes == 0 {
            return Err(schema("episodes", "must be at least 1".into()));
        }
        if self.demos == 0 {
            return Err(schema("demos", "must be at least 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(schema("max_rounds", "must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(schema("methods", "no methods listed".into()));
        }
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(schema("methods", "method names must be unique".into()));
        }
        if let Some(scene) = &self.scene {
            if scene.kind != self.env {
                return Err(schema("scene.kind", "does not match env".into()));
            }
            scene.validate().map_err(|e| schema("scene", e.to_string()))?;
        }
        self.schedule
            .build()
            .map_err(|e| schema("schedule", e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| schema("training", e.to_string()))?;
        self.steering
            .validate(self.schedule.steps)
            .map_err(|e| schema("steering", e.to_string()))?;
        self.critic
            .validate()
            .map_err(|e| schema("critic", e.to_string()))?;
        Ok(())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out_dir.join(&self.checkpoint)
    }

    /// Environment name used in result tables.
    pub fn env_name(&self) -> &'static str {
        self.env.name()
    }
}
