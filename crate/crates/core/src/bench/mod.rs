//! Training and benchmark harness: run a method matrix over seeded episodes
//! and write `metrics.csv`, `score_trace.csv`, `traces.jsonl` and SVG plots.
//!
//! Every episode is a pure function of the config and its index, so a run
//! with the stub critic reproduces its outputs byte for byte.

mod config;
mod metrics;
mod plot;
mod trace;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

pub use config::{default_methods, MethodKind, MethodSpec, RunConfig, ScheduleSpec, FORMAT_VERSION};
pub use metrics::{MetricsCell, MetricsTable, TracePoint};
pub use trace::{
    read_traces, replay, write_traces, EpisodeLine, ReplayReport, RoundLine, TraceFile, TraceRecord,
};

use crate::diffusion::{train_policy, DenoiserModel, DiffusionError};
use crate::envsim::{demos_to_tensor_file, make_env, Env, EnvError};
use crate::numerics::stream_id;
use crate::par::{map_indexed, Parallelism};
use crate::refine::{run_episode, EpisodeConfig, EpisodeTrace};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("format version {found} is not supported (this build reads version {expected})")]
    Version { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing checkpoint {0}; run `train` first")]
    MissingCheckpoint(PathBuf),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error("replay diverged from the recorded episode: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("plot: {0}")]
    Plot(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

/// Tag for per-episode seeds within a bench.
const EPISODE_TAG: u64 = 0xbe4c;

/// Seed of episode `index` in a run with global seed `seed`. Shared by all
/// methods so they face the same instructions and draws.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    stream_id(&[EPISODE_TAG, seed, index as u64])
}

pub fn build_env(cfg: &RunConfig) -> Result<Env> {
    Ok(match &cfg.scene {
        Some(scene) => Env::new(scene.clone(), cfg.seed)?,
        None => make_env(cfg.env, cfg.seed)?,
    })
}

pub struct Trained {
    pub model: DenoiserModel,
    pub final_loss: f64,
    pub checkpoint: PathBuf,
    pub demos: PathBuf,
}

/// Train a policy on generated demonstrations and write the checkpoint and
/// the demonstration set next to it.
pub fn train(cfg: &RunConfig) -> Result<Trained> {
    cfg.validate()?;
    let env = build_env(cfg)?;
    let demos = env.demos(cfg.demos);
    let out = train_policy(&demos, &cfg.training, cfg.schedule.build()?)?;
    let checkpoint = cfg.checkpoint_path();
    if let Some(dir) = checkpoint.parent() {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    out.model.save(&checkpoint)?;
    let demos_path = checkpoint.with_extension("demos.evst");
    crate::diffusion::write_tensor_file(&demos_path, &demos_to_tensor_file(&demos))?;
    Ok(Trained {
        model: out.model,
        final_loss: out.final_loss,
        checkpoint,
        demos: demos_path,
    })
}

pub fn load_model(cfg: &RunConfig) -> Result<DenoiserModel> {
    let path = cfg.checkpoint_path();
    if !path.exists() {
        return Err(BenchError::MissingCheckpoint(path));
    }
    Ok(DenoiserModel::load(&path)?)
}

/// Episode settings for `method`.
pub fn episode_config(cfg: &RunConfig, method: &MethodSpec, index: usize) -> EpisodeConfig {
    EpisodeConfig {
        max_rounds: if method.refine { cfg.max_rounds } else { 1 },
        steering: method.steering(&cfg.steering),
        critic: cfg.critic.clone(),
        env: cfg.env,
        seed: episode_seed(cfg.seed, index),
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: MethodSpec,
    pub episodes: Vec<EpisodeTrace>,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub config: RunConfig,
    pub runs: Vec<MethodRun>,
    pub metrics: MetricsTable,
}

/// Run every method over `cfg.episodes` episodes.
pub fn run_methods(cfg: &RunConfig, model: &DenoiserModel, mode: Parallelism) -> Result<BenchRun> {
    cfg.validate()?;
    let env = Arc::new(build_env(cfg)?);
    let mut runs = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let episodes = map_indexed(cfg.episodes, mode, |i| {
            let mut ep = episode_config(cfg, method, i);
            ep.steering.parallelism = Parallelism::Sequential;
            let ctx = env.episode_context(ep.seed);
            run_episode(model, &ctx, &ep, &ep.critic)
        });
        runs.push(MethodRun {
            method: method.clone(),
            episodes,
        });
    }
    let metrics = MetricsTable::from_runs(cfg.env_name(), &runs);
    Ok(BenchRun {
        config: cfg.clone(),
        runs,
        metrics,
    })
}

/// Files written by [`bench`].
#[derive(Debug, Clone)]
pub struct BenchOutputs {
    pub metrics_csv: PathBuf,
    pub score_trace_csv: PathBuf,
    pub traces: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Load the checkpoint, run the method matrix and write all outputs to
/// `cfg.out_dir`.
pub fn bench(cfg: &RunConfig, mode: Parallelism) -> Result<(BenchRun, BenchOutputs)> {
    let model = load_model(cfg)?;
    let run = run_methods(cfg, &model, mode)?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let metrics_csv = dir.join("metrics.csv");
    run.metrics.write_csv(&metrics_csv)?;
    let score_trace_csv = dir.join("score_trace.csv");
    run.metrics.write_trace_csv(&score_trace_csv)?;
    let traces = dir.join("traces.jsonl");
    write_traces(&traces, &run)?;
    let plots = vec![dir.join("score_trace.svg"), dir.join("msr.svg")];
    plot::score_trace(&run.metrics, &plots[0])?;
    plot::msr_bars(&run.metrics, &plots[1])?;
    Ok((
        run,
        BenchOutputs {
            metrics_csv,
            score_trace_csv,
            traces,
            plots,
        },
    ))
}
