//! Multi-seed sweeps. Seeds run independently on worker threads; results
//! come back in seed order regardless of scheduling.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::export::{self, ExportError};
use crate::scenario::ScenarioConfig;
use crate::sim::{self, Conclusions, RunOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalValues {
    pub entropy_alpha: f64,
    pub entropy_beta: f64,
    pub value_alpha: f64,
    pub value_beta: f64,
    pub cost_alpha: f64,
    pub cost_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finals: Option<FinalValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusions: Option<Conclusions>,
}

/// Fraction of valid seeds showing each model conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub closer_to_optimum_wins: f64,
    pub random_wins_stable: f64,
    pub control_wins_explosive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub seeds: Vec<SeedResult>,
    pub valid_runs: usize,
    pub fractions: Fractions,
}

impl SeedResult {
    fn from_output(seed: u64, out: &RunOutput) -> Self {
        let s = &out.summary;
        Self {
            seed,
            valid: true,
            error: None,
            finals: Some(FinalValues {
                entropy_alpha: s.alpha.entropy,
                entropy_beta: s.beta.entropy,
                value_alpha: s.alpha.value_benefit,
                value_beta: s.beta.value_benefit,
                cost_alpha: s.alpha.cum_cost,
                cost_beta: s.beta.cum_cost,
            }),
            conclusions: Some(s.conclusions),
        }
    }
}

/// Runs `config` once per seed on up to `workers` threads and hands each
/// finished run to `sink` (called from worker threads, in completion order).
pub fn sweep_with<F>(config: &ScenarioConfig, seeds: &[u64], workers: usize, sink: F) -> SweepReport
where
    F: Fn(u64, &RunOutput) -> Result<(), String> + Sync,
{
    let slots: Vec<Mutex<Option<SeedResult>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, seeds.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = seeds.get(i) else { break };
                let mut cfg = config.clone();
                cfg.seed = seed;
                let result = match sim::run(cfg) {
                    Ok(out) => match sink(seed, &out) {
                        Ok(()) => SeedResult::from_output(seed, &out),
                        Err(e) => invalid(seed, e),
                    },
                    Err(e) => invalid(seed, e.to_string()),
                };
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    let results: Vec<SeedResult> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every seed ran"))
        .collect();
    summarize(config.name.clone(), results)
}

fn invalid(seed: u64, error: String) -> SeedResult {
    log::warn!("seed {seed} excluded: {error}");
    SeedResult { seed, valid: false, error: Some(error), finals: None, conclusions: None }
}

fn summarize(scenario: String, seeds: Vec<SeedResult>) -> SweepReport {
    let valid: Vec<&Conclusions> = seeds.iter().filter_map(|s| s.conclusions.as_ref()).collect();
    let n = valid.len();
    let frac = |f: fn(&Conclusions) -> bool| {
        if n == 0 {
            0.0
        } else {
            valid.iter().filter(|c| f(c)).count() as f64 / n as f64
        }
    };
    let fractions = Fractions {
        closer_to_optimum_wins: frac(|c| c.closer_to_optimum_wins),
        random_wins_stable: frac(|c| c.random_wins_stable),
        control_wins_explosive: frac(|c| c.control_wins_explosive),
    };
    SweepReport { scenario, seeds, valid_runs: n, fractions }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn sweep(config: &ScenarioConfig, seeds: &[u64]) -> SweepReport {
    sweep_with(config, seeds, default_workers(), |_, _| Ok(()))
}

/// Sweep that exports each run to `dir/seed-<n>/` and writes `dir/sweep.json`.
pub fn sweep_to_dir(config: &ScenarioConfig, seeds: &[u64], dir: &Path, workers: usize) -> Result<SweepReport, ExportError> {
    let report = sweep_with(config, seeds, workers, |seed, out| {
        export::export(out, &dir.join(format!("seed-{seed}")))
            .map(|_| ())
            .map_err(|e| e.to_string())
    });
    let path = dir.join("sweep.json");
    std::fs::create_dir_all(dir).map_err(|source| ExportError::Io { path: dir.to_path_buf(), source })?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(|source| ExportError::Io { path, source })?;
    Ok(report)
}
