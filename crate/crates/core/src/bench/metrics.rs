use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchError, MethodRun, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub generation: usize,
    pub mean_best: f64,
    pub median_best: f64,
}

/// Results of one method on one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsCell {
    pub method: String,
    pub env: String,
    pub msr: f64,
    pub msr_stderr: f64,
    pub soa: f64,
    pub soa_stderr: f64,
    pub mean_rounds: f64,
    pub episodes: usize,
    /// Best score per generation of each episode's first round.
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    /// Sorted by `(method, env)`.
    pub cells: Vec<MetricsCell>,
}

/// Mean and standard error of a 0/1 sample.
fn rate(xs: &[bool]) -> (f64, f64) {
    let n = xs.len() as f64;
    let p = xs.iter().filter(|x| **x).count() as f64 / n;
    let se = if xs.len() > 1 {
        (p * (1.0 - p) / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (p, se)
}

pub(crate) fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl MetricsCell {
    pub fn from_run(env: &str, run: &MethodRun) -> Self {
        let eps = &run.episodes;
        let (msr, msr_stderr) = rate(&eps.iter().map(|e| e.success()).collect::<Vec<_>>());
        let (soa, soa_stderr) = rate(&eps.iter().map(|e| e.aligned()).collect::<Vec<_>>());
        let mean_rounds = eps.iter().map(|e| e.round_count() as f64).sum::<f64>() / eps.len() as f64;
        let firsts: Vec<_> = eps.iter().filter_map(|e| e.rounds.first()).collect();
        let gens = firsts.iter().map(|r| r.trace.len()).min().unwrap_or(0);
        let trace = (0..gens)
            .map(|g| {
                let mut v: Vec<f64> = firsts.iter().map(|r| r.trace[g].best).collect();
                v.sort_by(f64::total_cmp);
                TracePoint {
                    generation: g,
                    mean_best: v.iter().sum::<f64>() / v.len() as f64,
                    median_best: median(&v),
                }
            })
            .collect();
        MetricsCell {
            method: run.method.name.clone(),
            env: env.to_string(),
            msr,
            msr_stderr,
            soa,
            soa_stderr,
            mean_rounds,
            episodes: eps.len(),
            trace,
        }
    }
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Csv(e.to_string())
}

impl MetricsTable {
    pub fn from_runs(env: &str, runs: &[MethodRun]) -> Self {
        let mut t = MetricsTable {
            cells: runs.iter().map(|r| MetricsCell::from_run(env, r)).collect(),
        };
        t.sort();
        t
    }

    pub fn sort(&mut self) {
        self.cells
            .sort_by(|a, b| (&a.method, &a.env).cmp(&(&b.method, &b.env)));
    }

    pub fn get(&self, method: &str, env: &str) -> Option<&MetricsCell> {
        self.cells.iter().find(|c| c.method == method && c.env == env)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record([
            "method",
            "env",
            "msr",
            "msr_stderr",
            "soa",
            "soa_stderr",
            "mean_rounds",
            "episodes",
        ])
        .map_err(csv_err)?;
        for c in &self.cells {
            w.write_record([
                c.method.clone(),
                c.env.clone(),
                f(c.msr),
                f(c.msr_stderr),
                f(c.soa),
                f(c.soa_stderr),
                f(c.mean_rounds),
                c.episodes.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["method", "env", "generation", "mean_best", "median_best"])
            .map_err(csv_err)?;
        for c in &self.cells {
            for p in &c.trace {
                w.write_record([
                    c.method.clone(),
                    c.env.clone(),
                    p.generation.to_string(),
                    f(p.mean_best),
                    f(p.median_best),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| BenchError::io(path, e))
    }
}
