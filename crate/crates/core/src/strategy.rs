//! Operating strategies: a control-dominated ecosystem pools every payout in
//! a virtual hub and shares it out equally each hub period; a random-dominated
//! ecosystem lets every node keep its own profits and losses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{add_compensated, EcosystemState};
use crate::types::AgentId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("payout must be non-negative, got {0}")]
    NegativePayout(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Control,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Ticks between hub redistributions (control only).
    pub hub_period: u64,
}

impl StrategyConfig {
    pub fn control() -> Self {
        Self {
            kind: StrategyKind::Control,
            hub_period: 10,
        }
    }

    pub fn random() -> Self {
        Self {
            kind: StrategyKind::Random,
            hub_period: 10,
        }
    }
}

/// Profits held by a control hub between redistributions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Hub {
    pub pool: f64,
    pub collected: f64,
    pub distributed: f64,
}

/// Where a released payout ended up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Routing {
    Credited,
    Pooled,
    /// The agent died before its chain completed and nobody holds its share.
    Forfeited,
}

/// Routes one released escrow payout owed to `agent`.
pub fn route_payout(
    eco: &mut EcosystemState,
    agent: AgentId,
    amount: f64,
) -> Result<Routing, StrategyError> {
    if !(amount >= 0.0) {
        return Err(StrategyError::NegativePayout(amount));
    }
    let alive = match eco.agents.get_mut(&agent) {
        Some(a) => {
            a.record_gain(amount);
            true
        }
        None => false,
    };
    let routing = match eco.strategy.kind {
        StrategyKind::Control => {
            eco.hub.pool += amount;
            eco.hub.collected += amount;
            Routing::Pooled
        }
        StrategyKind::Random if alive => {
            eco.agents.get_mut(&agent).expect("alive").capital += amount;
            Routing::Credited
        }
        StrategyKind::Random => return Ok(Routing::Forfeited),
    };
    add_compensated(&mut eco.cum_gain, &mut eco.carry.gain, amount);
    Ok(routing)
}

/// Per-tick strategy step. Returns the amount handed out, if any.
pub fn strategy_tick(eco: &mut EcosystemState, tick: u64) -> f64 {
    let period = eco.strategy.hub_period.max(1);
    if tick % period != 0 {
        return 0.0;
    }
    for a in eco.agents.values_mut() {
        a.period_profit = 0.0;
    }
    if eco.strategy.kind != StrategyKind::Control || eco.agents.is_empty() {
        return 0.0;
    }
    let pool = eco.hub.pool;
    let share = pool / eco.agents.len() as f64;
    for a in eco.agents.values_mut() {
        a.capital += share;
    }
    eco.hub.pool = 0.0;
    eco.hub.distributed += pool;
    pool
}
