use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::config::ResolvedConfig;
use crate::runner::{execute, write_outputs, RunOutput};
use crate::CliError;

/// Parses `A..B` (end exclusive, `A < B`).
pub fn parse_seed_range(s: &str) -> Result<std::ops::Range<u64>, CliError> {
    let bad = || CliError::Config(format!("--seeds expects A..B with A < B, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(bad());
    }
    Ok(a..b)
}

pub fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed_{seed}"))
}

/// Runs every config on a small worker pool and returns the outputs in
/// input order. Results do not depend on scheduling.
pub fn run_all(configs: &[ResolvedConfig], workers: usize) -> Vec<Result<RunOutput, CliError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunOutput, CliError>>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..workers.clamp(1, configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let out = execute(cfg);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

/// Runs the configs and writes each to `root/seed_{n}`. Every run is
/// attempted; the first failure is returned after the rest are written.
pub fn sweep(configs: &[ResolvedConfig], root: &Path, workers: usize) -> Result<Vec<PathBuf>, CliError> {
    let mut dirs = Vec::new();
    let mut first_err = None;
    for (cfg, out) in configs.iter().zip(run_all(configs, workers)) {
        match out.and_then(|o| {
            let dir = seed_dir(root, cfg.seed);
            write_outputs(&o, &dir).map(|_| dir)
        }) {
            Ok(dir) => dirs.push(dir),
            Err(e) => {
                let e = CliError::Runtime(format!("seed {}: {e}", cfg.seed));
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(dirs),
    }
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}
