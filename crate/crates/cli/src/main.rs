use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use evosteer::bench::{self, RunConfig};
use evosteer::par::Parallelism;
use evosteer::verifier::API_KEY_ENV;
use evosteer_mock_critic::Script;

/// Evolutionary steering of diffusion policies on 2D desk tasks.
#[derive(Parser)]
#[command(name = "evosteer", version, after_help = after_help())]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn after_help() -> String {
    format!("Remote critic credentials are read from ${API_KEY_ENV} (sent as a bearer token).")
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy on generated demonstrations and write its checkpoint.
    Train(RunArgs),
    /// Run the method matrix and write metrics, traces and plots.
    Bench(RunArgs),
    /// Re-execute one recorded episode and check it matches.
    Replay {
        /// traces.jsonl written by `bench`.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        episode: usize,
        /// Method name; defaults to the first one in the recorded config.
        #[arg(long)]
        method: Option<String>,
    },
    /// Serve the mock critic until interrupted.
    MockCritic {
        #[arg(long, default_value = "127.0.0.1:8737")]
        addr: SocketAddr,
        /// JSON script of queued replies.
        #[arg(long)]
        script: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, replacing `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed override (also reseeds training).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg =
            RunConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.training.seed = seed;
        }
        Ok(cfg)
    }

    fn parallelism(&self) -> Result<Parallelism> {
        match self.workers {
            Some(0) => bail!("--workers must be at least 1"),
            Some(1) => Ok(Parallelism::Sequential),
            Some(n) => {
                init_pool(n)?;
                Ok(Parallelism::Threads)
            }
            None => Ok(Parallelism::Threads),
        }
    }
}

#[cfg(feature = "parallel")]
fn init_pool(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring worker pool")
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_n: usize) -> Result<()> {
    eprintln!("built without the parallel feature; running sequentially");
    Ok(())
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn train(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let start = Instant::now();
    let out = bench::train(&cfg)?;
    println!("final training loss {:.6}", out.final_loss);
    println!("checkpoint {}", show(&out.checkpoint));
    println!("demonstrations {}", show(&out.demos));
    eprintln!("trained in {:.1?}", start.elapsed());
    Ok(())
}

fn run_bench(args: &RunArgs) -> Result<()> {
    let cfg = args.load()?;
    let mode = args.parallelism()?;
    let start = Instant::now();
    let (run, out) = bench::bench(&cfg, mode)?;
    println!(
        "{:<20} {:<12} {:>7} {:>8} {:>7} {:>8} {:>7} {:>8}",
        "method", "env", "msr", "±", "soa", "±", "rounds", "episodes"
    );
    for c in &run.metrics.cells {
        println!(
            "{:<20} {:<12} {:>7.3} {:>8.3} {:>7.3} {:>8.3} {:>7.2} {:>8}",
            c.method, c.env, c.msr, c.msr_stderr, c.soa, c.soa_stderr, c.mean_rounds, c.episodes
        );
    }
    for p in [&out.metrics_csv, &out.score_trace_csv, &out.traces]
        .into_iter()
        .chain(&out.plots)
    {
        println!("wrote {}", show(p));
    }
    eprintln!("bench finished in {:.1?}", start.elapsed());
    Ok(())
}

fn replay(trace: &Path, episode: usize, method: Option<&str>) -> Result<()> {
    let report = bench::replay(trace, method, episode)?;
    for line in &report.lines {
        println!("{line}");
    }
    if !report.critic_rerun {
        println!("critic calls taken from the recording");
    }
    Ok(())
}

fn mock_critic(addr: SocketAddr, script: Option<&Path>) -> Result<()> {
    let script = match script {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Script::from_json(&text)?
        }
        None => Script::default(),
    };
    evosteer_mock_critic::serve_forever(addr, script, |bound| {
        println!("mock critic listening on http://{bound}");
    })?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train(a) => train(&a),
        Cmd::Bench(a) => run_bench(&a),
        Cmd::Replay {
            trace,
            episode,
            method,
        } => replay(&trace, episode, method.as_deref()),
        Cmd::MockCritic { addr, script } => mock_critic(addr, script.as_deref()),
    }
}
