use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, FORMAT_VERSION};
use super::{build_env, episode_config, load_model, BenchError, BenchRun, Result};
use crate::refine::{run_episode, EpisodeStatus, EpisodeTrace, RecordedCritic, RoundRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLine {
    pub method: String,
    pub episode: usize,
    pub seed: u64,
    pub target: String,
    pub status: EpisodeStatus,
    pub abort_reason: Option<String>,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLine {
    pub method: String,
    pub episode: usize,
    #[serde(flatten)]
    pub record: RoundRecord,
}

/// One line of `traces.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        format_version: u32,
        generator: String,
        config: Box<RunConfig>,
    },
    Episode(EpisodeLine),
    Round(RoundLine),
}

pub fn write_traces(path: &Path, run: &BenchRun) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |rec: &TraceRecord| -> Result<()> {
        let line = serde_json::to_string(rec).map_err(|e| BenchError::Trace(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| BenchError::io(path, e))
    };
    put(&TraceRecord::Header {
        format_version: FORMAT_VERSION,
        generator: concat!("evosteer ", env!("CARGO_PKG_VERSION")).to_string(),
        config: Box::new(run.config.clone()),
    })?;
    for mr in &run.runs {
        for (i, ep) in mr.episodes.iter().enumerate() {
            put(&TraceRecord::Episode(EpisodeLine {
                method: mr.method.name.clone(),
                episode: i,
                seed: ep.seed,
                target: ep.target.clone(),
                status: ep.status,
                abort_reason: ep.abort_reason.clone(),
                rounds: ep.round_count(),
            }))?;
            for r in &ep.rounds {
                put(&TraceRecord::Round(RoundLine {
                    method: mr.method.name.clone(),
                    episode: i,
                    record: r.clone(),
                }))?;
            }
        }
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

#[derive(Debug, Clone)]
pub struct TraceFile {
    pub path: PathBuf,
    pub config: RunConfig,
    pub episodes: Vec<EpisodeLine>,
    pub rounds: Vec<RoundLine>,
}

impl TraceFile {
    pub fn episode(&self, method: &str, index: usize) -> Option<(&EpisodeLine, Vec<&RoundRecord>)> {
        let ep = self
            .episodes
            .iter()
            .find(|e| e.method == method && e.episode == index)?;
        let rounds = self
            .rounds
            .iter()
            .filter(|r| r.method == method && r.episode == index)
            .map(|r| &r.record)
            .collect();
        Some((ep, rounds))
    }
}

pub fn read_traces(path: &Path) -> Result<TraceFile> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| BenchError::Trace("empty trace file".into()))?
        .map_err(|e| BenchError::io(path, e))?;
    // check the version before trusting the rest of the layout
    let head: serde_json::Value =
        serde_json::from_str(&first).map_err(|e| BenchError::Trace(format!("header: {e}")))?;
    if head.get("type").and_then(|t| t.as_str()) != Some("header") {
        return Err(BenchError::Trace("first line is not a header record".into()));
    }
    let found = head
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| BenchError::Trace("header has no format_version".into()))?;
    if found != FORMAT_VERSION as u64 {
        return Err(BenchError::Version {
            found: found as u32,
            expected: FORMAT_VERSION,
        });
    }
    let config = match serde_json::from_value::<TraceRecord>(head) {
        Ok(TraceRecord::Header { config, .. }) => *config,
        Ok(_) => unreachable!("type checked above"),
        Err(e) => return Err(BenchError::Trace(format!("header: {e}"))),
    };
    let mut episodes = Vec::new();
    let mut rounds = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| BenchError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TraceRecord>(&line) {
            Ok(TraceRecord::Episode(e)) => episodes.push(e),
            Ok(TraceRecord::Round(r)) => rounds.push(r),
            Ok(TraceRecord::Header { .. }) => {
                return Err(BenchError::Trace(format!("line {}: second header", n + 2)))
            }
            Err(e) => return Err(BenchError::Trace(format!("line {}: {e}", n + 2))),
        }
    }
    Ok(TraceFile {
        path: path.to_path_buf(),
        config,
        episodes,
        rounds,
    })
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub method: String,
    pub episode: usize,
    /// Human-readable reconstruction, one line per step.
    pub lines: Vec<String>,
    /// Critic calls were re-executed rather than played back.
    pub critic_rerun: bool,
}

fn fmt_action(a: &[f64]) -> String {
    let parts: Vec<String> = a.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Re-run one recorded episode and check it matches bit for bit. The
/// checkpoint is looked up relative to the trace file's directory.
pub fn replay(path: &Path, method: Option<&str>, episode: usize) -> Result<ReplayReport> {
    let tf = read_traces(path)?;
    let mut cfg = tf.config.clone();
    cfg.out_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let method = match method {
        Some(m) => cfg
            .methods
            .iter()
            .find(|s| s.name == m)
            .ok_or_else(|| BenchError::Trace(format!("no method {m:?} in trace")))?,
        None => cfg
            .methods
            .first()
            .ok_or_else(|| BenchError::Trace("trace config lists no methods".into()))?,
    }
    .clone();
    let (line, recorded) = tf
        .episode(&method.name, episode)
        .ok_or_else(|| BenchError::Trace(format!("episode {episode} of {} not in trace", method.name)))?;

    let ep_cfg = episode_config(&cfg, &method, episode);
    if ep_cfg.seed != line.seed {
        return Err(BenchError::Mismatch(format!(
            "episode seed {} != recorded {}",
            ep_cfg.seed, line.seed
        )));
    }
    let model = load_model(&cfg)?;
    let env = build_env(&cfg)?;
    let ctx = env.episode_context(ep_cfg.seed);
    if ctx.instruction().target != line.target {
        return Err(BenchError::Mismatch(format!(
            "target {} != recorded {}",
            ctx.instruction().target,
            line.target
        )));
    }

    let recorded_trace = EpisodeTrace {
        seed: line.seed,
        env: cfg.env,
        target: line.target.clone(),
        rounds: recorded.iter().map(|r| (*r).clone()).collect(),
        status: line.status,
        abort_reason: line.abort_reason.clone(),
        history: Vec::new(),
    };
    let critic_rerun = ep_cfg.critic.is_stub();
    let replayed = if critic_rerun {
        run_episode(&model, &ctx, &ep_cfg, &ep_cfg.critic)
    } else {
        run_episode(&model, &ctx, &ep_cfg, &RecordedCritic::new(&recorded_trace))
    };

    let mut lines = vec![format!(
        "episode {episode} of {} on {}: seed {}, instruction {:?}",
        method.name,
        cfg.env_name(),
        line.seed,
        ctx.instruction().text
    )];
    for r in &replayed.rounds {
        lines.push(format!(
            "round {}: program {} | steer seed {} | best score {:.6} | a* {} | distance {:.6} | success {} | verdict {}{}",
            r.round,
            r.program,
            r.steer_seed,
            r.best_score,
            fmt_action(&r.a_star),
            r.distance,
            r.success,
            r.verdict,
            r.revised_program
                .as_deref()
                .map(|p| format!(" | revised {p}"))
                .unwrap_or_default()
        ));
    }
    lines.push(format!(
        "status {:?} after {} round(s)",
        replayed.status,
        replayed.round_count()
    ));

    if replayed.rounds.len() != recorded_trace.rounds.len() {
        return Err(BenchError::Mismatch(format!(
            "{} rounds replayed, {} recorded",
            replayed.rounds.len(),
            recorded_trace.rounds.len()
        )));
    }
    for (a, b) in replayed.rounds.iter().zip(&recorded_trace.rounds) {
        if a != b {
            let (ja, jb) = (
                serde_json::to_string(a).unwrap_or_default(),
                serde_json::to_string(b).unwrap_or_default(),
            );
            return Err(BenchError::Mismatch(format!(
                "round {} differs:\n  replayed {ja}\n  recorded {jb}",
                a.round
            )));
        }
    }
    if replayed.status != recorded_trace.status {
        return Err(BenchError::Mismatch(format!(
            "status {:?} != recorded {:?}",
            replayed.status, recorded_trace.status
        )));
    }
    lines.push("replay matches the recorded episode".into());
    Ok(ReplayReport {
        method: method.name,
        episode,
        lines,
        critic_rerun,
    })
}
