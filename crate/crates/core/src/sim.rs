//! The deterministic run loop.
//!
//! Every tick runs the same phases in the same order:
//! replenish orders, let every agent act (one seeded shuffle of both
//! ecosystems), resolve combat, expire orders, apply strategies, run
//! births and deaths, check expansion, and snapshot both ecosystems.
//! A single RNG stream owned by the [`World`] feeds every draw.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{self, AgentError, EcosystemState, LifeEvent, ProcessOutcome};
use crate::metrics::{self, AuditError, LedgerReport, MetricsRecord};
use crate::scenario::{ConfigError, ScenarioConfig};
use crate::strategy;
use crate::types::{AgentId, EcosystemId};
use crate::world::{World, WorldError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("ledger audit failed: {0}")]
    Audit(#[from] AuditError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Birth,
    Death,
    Kill,
    Claim,
    Complete,
    Unlock,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Kill => "kill",
            EventKind::Claim => "claim",
            EventKind::Complete => "complete",
            EventKind::Unlock => "unlock",
        }
    }
}

/// One line of the debug event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    pub kind: EventKind,
    pub agent: Option<AgentId>,
    pub ecosystem: EcosystemId,
    pub detail: String,
}

pub struct Simulation {
    config: ScenarioConfig,
    world: World,
    ecos: [EcosystemState; 2],
    records: Vec<MetricsRecord>,
    census: Vec<CensusRow>,
    events: Vec<Event>,
    record_events: bool,
    strategy_enabled: bool,
    next_tick: u64,
}

/// Per-tick (level, region) head counts for one ecosystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub tick: u64,
    pub ecosystem: EcosystemId,
    /// Level-major: index `(level-1)*5 + region-1`.
    pub counts: [u64; 15],
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        Self::with_agent_id_base(config, 0)
    }

    /// Like [`Simulation::new`] but numbers agents from `base`. Agent ids
    /// only order agents, so any base yields the same run.
    pub fn with_agent_id_base(config: ScenarioConfig, base: u64) -> Result<Self, SimError> {
        config.validate()?;
        let mut world = World::new(config.demand.clone(), config.seed)?;
        world.set_agent_id_base(base);
        let mut ecos = EcosystemId::ALL.map(|id| {
            let strategy = match id {
                EcosystemId::Alpha => config.alpha,
                EcosystemId::Beta => config.beta,
            };
            EcosystemState::new(id, strategy, agents::home_region(id))
        });
        for id in EcosystemId::ALL {
            for _ in 0..config.params.initial_count(id) {
                agents::spawn_agent(&mut ecos[id.index()], None, &mut world, &config.params)?;
            }
        }
        let record_events = config.output.events;
        Ok(Self {
            config,
            world,
            ecos,
            records: Vec::new(),
            census: Vec::new(),
            events: Vec::new(),
            record_events,
            strategy_enabled: true,
            next_tick: 0,
        })
    }

    /// Skips the strategy phase from now on.
    pub fn disable_strategy(&mut self) {
        self.strategy_enabled = false;
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn ecosystem(&self, id: EcosystemId) -> &EcosystemState {
        &self.ecos[id.index()]
    }

    /// Mutable access for fault injection in tests.
    pub fn ecosystem_mut(&mut self, id: EcosystemId) -> &mut EcosystemState {
        &mut self.ecos[id.index()]
    }

    pub fn ecosystems(&self) -> &[EcosystemState; 2] {
        &self.ecos
    }

    pub fn records(&self) -> &[MetricsRecord] {
        &self.records
    }

    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }

    pub fn is_finished(&self) -> bool {
        self.next_tick >= self.config.ticks
    }

    fn log(&mut self, tick: u64, kind: EventKind, agent: Option<AgentId>, eco: EcosystemId, detail: String) {
        if self.record_events {
            self.events.push(Event { tick, kind, agent, ecosystem: eco, detail });
        }
    }

    /// Runs one tick through every phase.
    pub fn step(&mut self) -> Result<(), SimError> {
        let tick = self.next_tick;
        self.world.set_tick(tick);
        let params = self.config.params.clone();
        let window = self.config.niche.window as usize;

        self.world.replenish_orders();

        let mut turn: Vec<(EcosystemId, AgentId)> = Vec::new();
        for eco in self.ecos.iter_mut() {
            for a in eco.agents.values_mut() {
                a.begin_tick(window);
                turn.push((eco.id, a.id));
            }
        }
        turn.shuffle(self.world.rng());
        for (eco, id) in turn {
            let rec = agents::agent_tick(&mut self.world, &mut self.ecos, eco, id, &params)?;
            if let Some(order) = rec.claimed {
                self.log(tick, EventKind::Claim, Some(id), eco, format!("order={order}"));
            }
            if let Some(ProcessOutcome::Completed { chain, released, forfeited }) = rec.outcome {
                self.log(
                    tick,
                    EventKind::Complete,
                    Some(id),
                    eco,
                    format!("chain={chain} released={released} forfeited={forfeited}"),
                );
            }
        }

        for k in agents::resolve_combat(&mut self.ecos) {
            self.log(
                tick,
                EventKind::Kill,
                Some(k.killer),
                k.killer_eco,
                format!("victim={} absorbed={}", k.victim, k.absorbed),
            );
        }

        self.world.step_order_lifecycle();

        if self.strategy_enabled {
            for eco in self.ecos.iter_mut() {
                strategy::strategy_tick(eco, tick);
            }
        }

        for i in 0..2 {
            let events = agents::lifecycle(&mut self.ecos[i], &mut self.world, &params)?;
            let eco = self.ecos[i].id;
            for e in events {
                match e {
                    LifeEvent::Birth { parent, child, level } => self.log(
                        tick,
                        EventKind::Birth,
                        Some(child),
                        eco,
                        format!("parent={parent} level={level}"),
                    ),
                    LifeEvent::Death { agent, writeoff } => {
                        self.log(tick, EventKind::Death, Some(agent), eco, format!("writeoff={writeoff}"))
                    }
                }
            }
        }

        for i in 0..2 {
            let opened = agents::try_expand(&mut self.ecos[i], &params, tick);
            let eco = self.ecos[i].id;
            for r in opened {
                self.log(tick, EventKind::Unlock, None, eco, format!("region={r}"));
            }
        }

        for eco in &self.ecos {
            self.records.push(metrics::snapshot(eco, &self.world, self.config.niche.mode));
            self.census.push(CensusRow {
                tick,
                ecosystem: eco.id,
                counts: metrics::attribute_census(eco, &self.world),
            });
        }
        self.next_tick += 1;
        Ok(())
    }

    pub fn audit(&self) -> Result<LedgerReport, AuditError> {
        metrics::ledger_audit(&self.world, &self.ecos)
    }

    /// Runs to completion and audits the final state.
    pub fn finish(mut self) -> Result<RunOutput, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        let ledger = self.audit()?;
        let summary = Summary::from_run(&self.config, &self.records, &self.ecos);
        Ok(RunOutput {
            config: self.config,
            metrics: self.records,
            census: self.census,
            events: self.events,
            ledger,
            order_ledger: self.world.ledger.clone(),
            summary,
        })
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub metrics: Vec<MetricsRecord>,
    pub census: Vec<CensusRow>,
    pub events: Vec<Event>,
    pub ledger: LedgerReport,
    pub order_ledger: crate::world::OrderLedger,
    pub summary: Summary,
}

impl RunOutput {
    pub fn final_record(&self, eco: EcosystemId) -> Option<&MetricsRecord> {
        self.metrics.iter().rev().find(|r| r.ecosystem == eco)
    }

    pub fn series(&self, eco: EcosystemId) -> impl Iterator<Item = &MetricsRecord> {
        self.metrics.iter().filter(move |r| r.ecosystem == eco)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcoSummary {
    pub n_agents: usize,
    pub entropy: f64,
    pub cum_cost: f64,
    pub cum_gain: f64,
    pub value_benefit: f64,
    pub unlock_ticks: [Option<u64>; 5],
}

/// Final values and the model-level orderings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ticks: u64,
    pub alpha: EcoSummary,
    pub beta: EcoSummary,
    pub burst_tick: Option<u64>,
    pub conclusions: Conclusions,
}

/// Whether the run exhibits each of the three model conclusions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conclusions {
    /// The ecosystem whose final entropy is closer to `log2 sqrt(N)` has the
    /// higher final value benefit.
    pub closer_to_optimum_wins: bool,
    /// Final `V_beta > V_alpha` and `H_beta >= H_alpha` at every snapshot of
    /// the last 100 ticks.
    pub random_wins_stable: bool,
    /// `C_beta > C_alpha` at some tick after the burst (or any tick without
    /// one) and final `V_alpha > V_beta`.
    pub control_wins_explosive: bool,
}

pub const LATE_WINDOW: u64 = 100;

impl Conclusions {
    pub fn evaluate(records: &[MetricsRecord], burst_tick: Option<u64>) -> Self {
        let pairs: Vec<(&MetricsRecord, &MetricsRecord)> = records
            .chunks(2)
            .filter_map(|c| match c {
                [a, b] if a.ecosystem == EcosystemId::Alpha && b.ecosystem == EcosystemId::Beta => Some((a, b)),
                _ => None,
            })
            .collect();
        let Some(&(fa, fb)) = pairs.last() else {
            return Self {
                closer_to_optimum_wins: false,
                random_wins_stable: false,
                control_wins_explosive: false,
            };
        };
        let last = fa.tick;
        let late_start = (last + 1).saturating_sub(LATE_WINDOW);
        let entropy_order = pairs
            .iter()
            .filter(|(a, _)| a.tick >= late_start)
            .all(|(a, b)| b.entropy >= a.entropy);
        let after = burst_tick.unwrap_or(0);
        let beta_costlier = pairs
            .iter()
            .any(|(a, b)| a.tick > after && b.cum_cost > a.cum_cost);
        let gap = |r: &MetricsRecord| {
            let optimum = if r.n_agents > 0 { (r.n_agents as f64).sqrt().log2() } else { 0.0 };
            (r.entropy - optimum).abs()
        };
        let closer_to_optimum_wins = match gap(fa).partial_cmp(&gap(fb)) {
            Some(std::cmp::Ordering::Less) => fa.value_benefit > fb.value_benefit,
            Some(std::cmp::Ordering::Greater) => fb.value_benefit > fa.value_benefit,
            _ => false,
        };
        Self {
            closer_to_optimum_wins,
            random_wins_stable: fb.value_benefit > fa.value_benefit && entropy_order,
            control_wins_explosive: beta_costlier && fa.value_benefit > fb.value_benefit,
        }
    }
}

impl Summary {
    pub fn from_run(config: &ScenarioConfig, records: &[MetricsRecord], ecos: &[EcosystemState; 2]) -> Self {
        let eco_summary = |id: EcosystemId| {
            let last = records.iter().rev().find(|r| r.ecosystem == id);
            let e = &ecos[id.index()];
            EcoSummary {
                n_agents: e.agents.len(),
                entropy: last.map_or(0.0, |r| r.entropy),
                cum_cost: e.cum_cost,
                cum_gain: e.cum_gain,
                value_benefit: e.cum_gain - e.cum_cost,
                unlock_ticks: e.unlock_ticks,
            }
        };
        Self {
            ticks: config.ticks,
            alpha: eco_summary(EcosystemId::Alpha),
            beta: eco_summary(EcosystemId::Beta),
            burst_tick: config.burst_tick(),
            conclusions: Conclusions::evaluate(records, config.burst_tick()),
        }
    }
}

/// Builds, runs and audits a scenario.
pub fn run(config: ScenarioConfig) -> Result<RunOutput, SimError> {
    Simulation::new(config)?.finish()
}
