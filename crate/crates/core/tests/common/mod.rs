#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use evosteer::bench::{build_env, RunConfig};
use evosteer::diffusion::{train_policy, DenoiserModel};
use evosteer::envsim::Env;

pub fn config_path(env: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{env}.json"))
}

/// Shipped config for `env`.
pub fn config(env: &str) -> RunConfig {
    RunConfig::load(&config_path(env)).expect("shipped config loads")
}

pub struct Fixture {
    pub cfg: RunConfig,
    pub env: Env,
    pub model: DenoiserModel,
}

/// Policy trained from the shipped config, once per test binary.
pub fn trained(env: &str) -> Arc<Fixture> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Fixture>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap();
    map.entry(env.to_string())
        .or_insert_with(|| {
            let cfg = config(env);
            let env = build_env(&cfg).unwrap();
            let demos = env.demos(cfg.demos);
            let model = train_policy(&demos, &cfg.training, cfg.schedule.build().unwrap())
                .unwrap()
                .model;
            Arc::new(Fixture { cfg, env, model })
        })
        .clone()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
