//! Per-tick observables and the run-level conservation audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::EcosystemState;
use crate::entropy::{self, NicheDistribution};
use crate::types::{EcosystemId, RegionId};
use crate::world::World;

/// How agents are partitioned into niches for the entropy measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NicheMode {
    /// One class per (level, region) pair.
    Attribute,
    /// Equal-width bins over windowed value efficiency.
    Efficiency,
}

impl std::str::FromStr for NicheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "attribute" => Ok(NicheMode::Attribute),
            "efficiency" => Ok(NicheMode::Efficiency),
            other => Err(format!("unknown niche mode `{other}`")),
        }
    }
}

/// One row of per-tick output for one ecosystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub tick: u64,
    pub ecosystem: EcosystemId,
    pub n_agents: usize,
    pub n_by_level: [usize; 3],
    pub entropy: f64,
    pub cum_cost: f64,
    pub cum_gain: f64,
    pub value_benefit: f64,
    pub hub_pool: f64,
    pub orders_by_region: [u32; 5],
    pub births: u64,
    pub deaths: u64,
    pub kills: u64,
}

/// Agents per (level, region), level-major: index `(level-1)*5 + region-1`.
pub fn attribute_census(eco: &EcosystemState, world: &World) -> [u64; 15] {
    let mut census = [0u64; 15];
    for a in eco.agents.values() {
        let r = world.region_at(a.position);
        census[(a.level as usize - 1) * 5 + r.index()] += 1;
    }
    census
}

/// Windowed efficiency `gained / consumed` per agent; agents that consumed
/// nothing count as zero efficiency.
pub fn efficiencies(eco: &EcosystemState) -> Vec<f64> {
    eco.agents
        .values()
        .map(|a| {
            let (gained, consumed) = a.window_totals();
            let rec = entropy::EfficiencyRecord { gained, consumed, window: a.flows.len() as u32 };
            entropy::value_efficiency(&rec).unwrap_or(0.0)
        })
        .collect()
}

/// Bins values into `ceil(sqrt(n))` equal-width classes over `[min, max]`,
/// left-closed with the last bin closed on both sides.
pub fn efficiency_bins(values: &[f64]) -> Vec<u64> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![values.len() as u64];
    }
    let bins = (values.len() as f64).sqrt().ceil() as usize;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let i = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

/// Niche census of an ecosystem; `None` when it has no living agents.
pub fn classify_niches(eco: &EcosystemState, world: &World, mode: NicheMode) -> Option<NicheDistribution> {
    if eco.agents.is_empty() {
        return None;
    }
    Some(match mode {
        NicheMode::Attribute => NicheDistribution::new(attribute_census(eco, world).to_vec()),
        NicheMode::Efficiency => NicheDistribution::new(efficiency_bins(&efficiencies(eco))),
    })
}

pub fn snapshot(eco: &EcosystemState, world: &World, mode: NicheMode) -> MetricsRecord {
    let entropy = classify_niches(eco, world, mode)
        .and_then(|d| entropy::shannon_entropy(&d).ok())
        .unwrap_or(0.0);
    let n_by_level = eco.count_by_level();
    let orders_by_region = RegionId::ALL.map(|r| world.live_in_region(r));
    MetricsRecord {
        tick: world.tick(),
        ecosystem: eco.id,
        n_agents: eco.agents.len(),
        n_by_level,
        entropy,
        cum_cost: eco.cum_cost,
        cum_gain: eco.cum_gain,
        value_benefit: entropy::value_benefit(eco.cum_gain, eco.cum_cost),
        hub_pool: eco.hub.pool,
        orders_by_region,
        births: eco.births,
        deaths: eco.deaths,
        kills: eco.kills,
    }
}

pub const AUDIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("capital ledger out of balance by {delta}")]
    CapitalImbalance { delta: f64, report: Box<LedgerReport> },
    #[error("order ledger broken: generated {generated} != completed {completed} + expired {expired} + live {live}")]
    OrderImbalance {
        generated: u64,
        completed: u64,
        expired: u64,
        live: u64,
    },
}

/// Terms of the capital-conservation identity
/// `founding + released = living + hubs + costs + writeoffs`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub founding_capital: f64,
    pub released_payouts: f64,
    pub living_capital: f64,
    pub hub_pools: f64,
    pub cum_cost: f64,
    pub writeoffs: f64,
    /// Parent-to-child endowments; internal, listed for reference.
    pub child_endowments: f64,
    pub voided_escrow: f64,
    pub forfeited_payouts: f64,
    pub generated_chains: u64,
    pub completed_chains: u64,
    pub expired_chains: u64,
    pub live_chains: u64,
    /// `sources - sinks`.
    pub delta: f64,
}

pub fn ledger_audit(world: &World, ecos: &[EcosystemState; 2]) -> Result<LedgerReport, AuditError> {
    let sum = |f: &dyn Fn(&EcosystemState) -> f64| ecos.iter().map(f).sum::<f64>();
    let mut r = LedgerReport {
        founding_capital: sum(&|e| e.exact_totals().2),
        released_payouts: sum(&|e| e.exact_totals().1),
        living_capital: sum(&|e| e.living_capital()),
        hub_pools: sum(&|e| e.hub.pool),
        cum_cost: sum(&|e| e.exact_totals().0),
        writeoffs: sum(&|e| e.exact_totals().3),
        child_endowments: sum(&|e| e.child_endowments),
        voided_escrow: world.ledger.voided_value,
        forfeited_payouts: world.ledger.forfeited_value,
        generated_chains: world.ledger.generated_chains,
        completed_chains: world.ledger.completed_chains,
        expired_chains: world.ledger.expired_chains,
        live_chains: world.live_order_count() as u64,
        delta: 0.0,
    };
    r.delta = (r.founding_capital + r.released_payouts)
        - (r.living_capital + r.hub_pools + r.cum_cost + r.writeoffs);
    if !(r.delta.abs() <= AUDIT_TOLERANCE) {
        return Err(AuditError::CapitalImbalance { delta: r.delta, report: Box::new(r) });
    }
    if r.generated_chains != r.completed_chains + r.expired_chains + r.live_chains {
        return Err(AuditError::OrderImbalance {
            generated: r.generated_chains,
            completed: r.completed_chains,
            expired: r.expired_chains,
            live: r.live_chains,
        });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{home_region, Agent};
    use crate::scenario::Preset;
    use crate::strategy::StrategyConfig;
    use crate::types::{AgentId, Pos};

    fn eco_with(levels_positions: &[(u8, Pos)]) -> (EcosystemState, World) {
        let world = World::new(Preset::Case1.config().demand, 1).unwrap();
        let mut eco = EcosystemState::new(EcosystemId::Alpha, StrategyConfig::control(), home_region(EcosystemId::Alpha));
        for (i, &(level, pos)) in levels_positions.iter().enumerate() {
            let id = AgentId(i as u64);
            eco.agents.insert(id, Agent::new(id, EcosystemId::Alpha, level, pos, 100.0, 2, 2, 0));
        }
        (eco, world)
    }

    #[test]
    fn attribute_two_equal_classes() {
        let mut v = vec![(1, Pos::new(59, 79)); 8];
        v.extend(vec![(2, Pos::new(59, 79)); 8]);
        let (eco, world) = eco_with(&v);
        let d = classify_niches(&eco, &world, NicheMode::Attribute).unwrap();
        let mut nz: Vec<u64> = d.counts().iter().copied().filter(|&c| c > 0).collect();
        nz.sort();
        assert_eq!(nz, vec![8, 8]);
        assert_eq!(snapshot(&eco, &world, NicheMode::Attribute).entropy, 1.0);
    }

    #[test]
    fn attribute_single_niche_has_zero_entropy() {
        let (eco, world) = eco_with(&[(1, Pos::new(59, 79)); 16]);
        assert_eq!(snapshot(&eco, &world, NicheMode::Attribute).entropy, 0.0);
    }

    #[test]
    fn identical_efficiencies_form_one_class() {
        let (eco, world) = eco_with(&[(1, Pos::new(59, 79)); 9]);
        let d = classify_niches(&eco, &world, NicheMode::Efficiency).unwrap();
        assert_eq!(d.counts(), &[9]);
        assert_eq!(snapshot(&eco, &world, NicheMode::Efficiency).entropy, 0.0);
    }

    #[test]
    fn bins_are_left_closed_last_closed() {
        // 4 values -> 2 bins over [0, 2]: [0,1) and [1,2]
        assert_eq!(efficiency_bins(&[0.0, 0.5, 1.0, 2.0]), vec![2, 2]);
        assert_eq!(efficiency_bins(&[0.0, 0.0, 0.0, 0.0, 3.0]), vec![4, 0, 1]);
        assert!(efficiency_bins(&[]).is_empty());
    }

    #[test]
    fn zero_consumption_maps_to_zero_efficiency() {
        let (mut eco, _) = eco_with(&[(1, Pos::new(59, 79)); 2]);
        eco.agents.get_mut(&AgentId(0)).unwrap().flows[0].gained = 10.0;
        assert_eq!(efficiencies(&eco), vec![0.0, 0.0]);
        eco.agents.get_mut(&AgentId(0)).unwrap().flows[0].consumed = 5.0;
        assert_eq!(efficiencies(&eco), vec![2.0, 0.0]);
    }

    #[test]
    fn snapshot_value_benefit_and_purity() {
        let (mut eco, world) = eco_with(&[(1, Pos::new(59, 79))]);
        eco.cum_gain = 500.0;
        eco.cum_cost = 420.0;
        let a = snapshot(&eco, &world, NicheMode::Efficiency);
        assert_eq!(a.value_benefit, 80.0);
        assert_eq!(a, snapshot(&eco, &world, NicheMode::Efficiency));
    }

    #[test]
    fn empty_ecosystem_snapshot() {
        let (mut eco, world) = eco_with(&[]);
        eco.cum_gain = 10.0;
        eco.cum_cost = 4.0;
        let s = snapshot(&eco, &world, NicheMode::Efficiency);
        assert_eq!((s.n_agents, s.entropy, s.value_benefit), (0, 0.0, 6.0));
        assert!(classify_niches(&eco, &world, NicheMode::Attribute).is_none());
    }
}
