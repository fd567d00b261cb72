//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a JSON string so the page can stay plain JS.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ecoentropy::entropy::{self, CostModel, ModeComparison};
use ecoentropy::types::{GRID_HEIGHT, GRID_WIDTH};
use ecoentropy::{EcosystemId, Preset, Simulation};

#[derive(Serialize)]
struct CostPoint {
    m: f64,
    management: f64,
    matching: f64,
    total: f64,
}

#[derive(Serialize)]
struct CostCurve {
    points: Vec<CostPoint>,
    optimum_m: f64,
    min_cost: f64,
    optimum_entropy: f64,
}

#[derive(Serialize)]
struct ModePoint {
    demand: f64,
    control: f64,
    random: f64,
}

#[derive(Serialize)]
struct ModeCurve {
    points: Vec<ModePoint>,
    dividing_point: f64,
}

#[derive(Serialize)]
struct EcoFrame {
    entropy: f64,
    cum_cost: f64,
    cum_gain: f64,
    value_benefit: f64,
    n_agents: usize,
    /// Flattened `[x, y, level]` triples.
    agents: Vec<i32>,
}

#[derive(Serialize)]
struct Frame {
    tick: u64,
    finished: bool,
    width: i32,
    height: i32,
    alpha: EcoFrame,
    beta: EcoFrame,
}

/// Management, matching and total cost over `m` in `[1, n]`, log-spaced.
pub fn cost_curve_json(k: f64, n: f64, samples: usize) -> Result<String, String> {
    let samples = samples.max(2);
    let opt = entropy::optimal_partition(k, n).map_err(|e| e.to_string())?;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let m = n.powf(i as f64 / (samples - 1) as f64).clamp(1.0, n);
        let c = entropy::operating_cost(&CostModel::new(k, n, m).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        points.push(CostPoint { m, management: c.management, matching: c.matching, total: c.total });
    }
    let curve = CostCurve { points, optimum_m: opt.niches, min_cost: opt.min_cost, optimum_entropy: opt.entropy };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

/// Cost of both operating modes as demand goes from 0 to `max_demand`.
pub fn mode_curve_json(k: f64, n: f64, ma: f64, mb: f64, max_demand: f64, samples: usize) -> Result<String, String> {
    let samples = samples.max(2);
    let d = entropy::demand_dividing_point(n, ma, mb).map_err(|e| e.to_string())?;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let demand = max_demand * i as f64 / (samples - 1) as f64;
        let c = entropy::mode_costs(k, n, &ModeComparison { control_niches: ma, random_niches: mb, demand })
            .map_err(|e| e.to_string())?;
        points.push(ModePoint { demand, control: c.control, random: c.random });
    }
    serde_json::to_string(&ModeCurve { points, dividing_point: d }).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn cost_curve(k: f64, n: f64, samples: usize) -> Result<String, String> {
    cost_curve_json(k, n, samples)
}

#[wasm_bindgen]
pub fn mode_curve(k: f64, n: f64, ma: f64, mb: f64, max_demand: f64, samples: usize) -> Result<String, String> {
    mode_curve_json(k, n, ma, mb, max_demand, samples)
}

/// A simulation the page advances a few ticks per animation frame.
#[wasm_bindgen]
pub struct Demo {
    sim: Simulation,
}

impl Demo {
    pub fn create(preset: &str, seed: u64, ticks: u64) -> Result<Demo, String> {
        let preset: Preset = preset.parse().map_err(|e: <Preset as std::str::FromStr>::Err| e.to_string())?;
        let mut cfg = preset.config();
        cfg.seed = seed;
        cfg.ticks = ticks;
        cfg.validate().map_err(|e| e.to_string())?;
        let sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
        Ok(Demo { sim })
    }

    pub fn advance(&mut self, n: u32) -> Result<String, String> {
        for _ in 0..n {
            if self.sim.is_finished() {
                break;
            }
            self.sim.step().map_err(|e| e.to_string())?;
        }
        serde_json::to_string(&self.frame()).map_err(|e| e.to_string())
    }

    fn eco_frame(&self, id: EcosystemId) -> EcoFrame {
        let eco = self.sim.ecosystem(id);
        let last = self.sim.records().iter().rev().find(|r| r.ecosystem == id);
        let mut agents = Vec::with_capacity(eco.agents.len() * 3);
        for a in eco.agents.values() {
            agents.extend([a.position.x, a.position.y, a.level as i32]);
        }
        EcoFrame {
            entropy: last.map_or(0.0, |r| r.entropy),
            cum_cost: last.map_or(0.0, |r| r.cum_cost),
            cum_gain: last.map_or(0.0, |r| r.cum_gain),
            value_benefit: last.map_or(0.0, |r| r.value_benefit),
            n_agents: eco.agents.len(),
            agents,
        }
    }

    fn frame(&self) -> Frame {
        Frame {
            tick: self.sim.next_tick(),
            finished: self.sim.is_finished(),
            width: GRID_WIDTH,
            height: GRID_HEIGHT,
            alpha: self.eco_frame(EcosystemId::Alpha),
            beta: self.eco_frame(EcosystemId::Beta),
        }
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, seed: u64, ticks: u64) -> Result<Demo, String> {
        Demo::create(preset, seed, ticks)
    }

    /// Runs up to `n` ticks and returns the current frame.
    pub fn step(&mut self, n: u32) -> Result<String, String> {
        self.advance(n)
    }
}
