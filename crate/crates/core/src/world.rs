//! The demand side: the grid, its five regions, order generation and the
//! staged order lifecycle with escrowed payouts.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{AgentId, EcosystemId, OrderId, Pos, RegionId, GRID_HEIGHT, GRID_WIDTH};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("invalid demand profile: {0}")]
    Config(String),
    #[error("position {0} is outside the grid")]
    OutOfBounds(Pos),
    #[error("order {0} has no further stage to derive")]
    NoFurtherStage(OrderId),
}

/// Static per-region parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub id: RegionId,
    pub center: Pos,
    /// Capital charged per cell moved inside the region.
    pub distance_cost_k: f64,
    /// Inclusive bounds of the per-tick operation cost.
    pub op_cost_range: (f64, f64),
    /// Stage count of primary orders generated here.
    pub complexity: u8,
}

pub const REGIONS: [Region; 5] = [
    Region {
        id: RegionId::ALL[0],
        center: Pos::new(59, 79),
        distance_cost_k: 1.0,
        op_cost_range: (3.0, 5.0),
        complexity: 1,
    },
    Region {
        id: RegionId::ALL[1],
        center: Pos::new(85, 26),
        distance_cost_k: 1.3,
        op_cost_range: (3.0, 7.0),
        complexity: 2,
    },
    Region {
        id: RegionId::ALL[2],
        center: Pos::new(125, 54),
        distance_cost_k: 1.7,
        op_cost_range: (3.0, 9.0),
        complexity: 3,
    },
    Region {
        id: RegionId::ALL[3],
        center: Pos::new(157, 90),
        distance_cost_k: 1.0,
        op_cost_range: (3.0, 5.0),
        complexity: 1,
    },
    Region {
        id: RegionId::ALL[4],
        center: Pos::new(180, 36),
        distance_cost_k: 1.3,
        op_cost_range: (3.0, 7.0),
        complexity: 2,
    },
];

pub fn region(id: RegionId) -> &'static Region {
    &REGIONS[id.index()]
}

/// Region whose center is nearest to `pos`; ties go to the lower id.
pub fn region_of(pos: Pos) -> Result<RegionId, WorldError> {
    if !pos.in_bounds() {
        return Err(WorldError::OutOfBounds(pos));
    }
    Ok(nearest_region(pos))
}

fn nearest_region(pos: Pos) -> RegionId {
    let mut best = REGIONS[0].id;
    let mut best_d = i64::MAX;
    for r in &REGIONS {
        let d = pos.dist2(r.center);
        if d < best_d {
            best_d = d;
            best = r.id;
        }
    }
    best
}

/// Payout fractions per stage, first stage first.
pub fn payout_split(complexity: u8) -> &'static [f64] {
    match complexity {
        1 => &[1.0],
        2 => &[0.6, 0.4],
        _ => &[0.4, 0.3, 0.3],
    }
}

/// Inclusive chain value bounds for a primary order of the given complexity.
pub fn chain_value_range(complexity: u8) -> (u32, u32) {
    match complexity {
        1 => (10, 30),
        2 => (50, 80),
        _ => (70, 100),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub tick: u64,
    pub reference: f64,
}

/// Market trend of one region: `reference + amplitude * sin(2 pi t / period)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionTrend {
    pub reference: f64,
    pub amplitude: f64,
    pub period: u32,
    /// Reference-level overrides taking effect from their tick onwards.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bursts: Vec<Burst>,
}

impl RegionTrend {
    pub fn stable(reference: f64, amplitude: f64, period: u32) -> Self {
        Self {
            reference,
            amplitude,
            period,
            bursts: Vec::new(),
        }
    }

    pub fn reference_at(&self, tick: u64) -> f64 {
        self.bursts
            .iter()
            .filter(|b| b.tick <= tick)
            .max_by_key(|b| b.tick)
            .map_or(self.reference, |b| b.reference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexityMode {
    /// Complexity fixed by the region of origin.
    Region,
    /// Complexity drawn uniformly from 1..=3 per order.
    Random,
}

/// Demand-side characteristics of the market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandProfile {
    /// One trend per region, region 1 first.
    pub trends: Vec<RegionTrend>,
    /// Optional cap on primary orders generated over a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_cap: Option<u64>,
    /// Radius of the disc around each region center where orders appear.
    pub scatter_radius: i32,
    /// Ticks an order stage stays claimable.
    pub stage_lifetime: u64,
    pub complexity_mode: ComplexityMode,
    /// Carried for completeness; not used by the simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qos_preference: Option<serde_json::Value>,
}

impl DemandProfile {
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.trends.len() != 5 {
            return Err(WorldError::Config(format!(
                "demand.trends must list 5 regions, got {}",
                self.trends.len()
            )));
        }
        for (i, t) in self.trends.iter().enumerate() {
            let field = |name: &str| format!("demand.trends[{i}].{name}");
            if !(t.reference >= 0.0) {
                return Err(WorldError::Config(format!("{} must be >= 0", field("reference"))));
            }
            if !(t.amplitude >= 0.0) {
                return Err(WorldError::Config(format!("{} must be >= 0", field("amplitude"))));
            }
            if t.period < 1 {
                return Err(WorldError::Config(format!("{} must be >= 1", field("period"))));
            }
            if t.bursts.iter().any(|b| !(b.reference >= 0.0)) {
                return Err(WorldError::Config(format!("{} must be >= 0", field("bursts.reference"))));
            }
        }
        if self.scatter_radius < 0 {
            return Err(WorldError::Config("demand.scatter_radius must be >= 0".into()));
        }
        if self.stage_lifetime < 1 {
            return Err(WorldError::Config("demand.stage_lifetime must be >= 1".into()));
        }
        Ok(())
    }

    pub fn trend(&self, region: RegionId) -> &RegionTrend {
        &self.trends[region.index()]
    }
}

/// Standing-stock target of live primary orders in `region` at `tick`.
pub fn target_order_count(region: RegionId, tick: u64, profile: &DemandProfile) -> u64 {
    let trend = profile.trend(region);
    let phase = 2.0 * PI * (tick % trend.period as u64) as f64 / trend.period as f64;
    let y = trend.reference_at(tick) + trend.amplitude * phase.sin();
    y.round().max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscrowEntry {
    pub agent: AgentId,
    pub ecosystem: EcosystemId,
    pub payout: f64,
}

/// One claimable stage of an order chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: OrderId,
    /// Id of the primary order that started the chain.
    pub chain_id: OrderId,
    /// Region the order sits in.
    pub region: RegionId,
    /// Agent level that may process this stage.
    pub stage_level: u8,
    pub remaining_stages: u8,
    pub position: Pos,
    pub chain_value: f64,
    pub escrow: Vec<EscrowEntry>,
    pub born_tick: u64,
    pub expiry_tick: u64,
}

impl Order {
    pub fn complexity(&self) -> u8 {
        self.stage_level + self.remaining_stages
    }

    pub fn split(&self) -> &'static [f64] {
        payout_split(self.complexity())
    }

    /// Payout owed to whoever processes the current stage.
    pub fn stage_payout(&self) -> f64 {
        self.split()[(self.stage_level - 1) as usize] * self.chain_value
    }

    pub fn escrowed_value(&self) -> f64 {
        self.escrow.iter().map(|e| e.payout).sum()
    }
}

/// Chain counters and value flows of the order pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderLedger {
    pub generated_chains: u64,
    pub completed_chains: u64,
    pub expired_chains: u64,
    /// Payouts released to ecosystems on chain completion.
    pub released_value: f64,
    /// Escrow voided by expiry.
    pub voided_value: f64,
    /// Released payouts owed to agents that had already died.
    pub forfeited_value: f64,
}

/// Orders removed by expiry during one lifecycle step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpiryReport {
    pub expired_chains: Vec<OrderId>,
    pub voided_escrow: f64,
}

pub struct World {
    tick: u64,
    rng: ChaCha8Rng,
    profile: DemandProfile,
    region_map: Vec<u8>,
    orders: BTreeMap<OrderId, Order>,
    cells: Vec<Vec<OrderId>>,
    live_counts: [[u32; 3]; 5],
    next_order: u64,
    next_agent: u64,
    pub ledger: OrderLedger,
}

impl World {
    pub fn new(profile: DemandProfile, seed: u64) -> Result<Self, WorldError> {
        profile.validate()?;
        let mut region_map = vec![0u8; (GRID_WIDTH * GRID_HEIGHT) as usize];
        for y in 0..GRID_HEIGHT {
            for x in 0..GRID_WIDTH {
                let p = Pos::new(x, y);
                region_map[p.cell_index()] = nearest_region(p).get();
            }
        }
        Ok(Self {
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            profile,
            region_map,
            orders: BTreeMap::new(),
            cells: vec![Vec::new(); (GRID_WIDTH * GRID_HEIGHT) as usize],
            live_counts: [[0; 3]; 5],
            next_order: 0,
            next_agent: 0,
            ledger: OrderLedger::default(),
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    pub fn profile(&self) -> &DemandProfile {
        &self.profile
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Starts agent numbering at `base`. Only meaningful before any agent
    /// has been created.
    pub fn set_agent_id_base(&mut self, base: u64) {
        self.next_agent = base;
    }

    pub fn next_agent_id(&mut self) -> AgentId {
        let id = AgentId(self.next_agent);
        self.next_agent += 1;
        id
    }

    /// Region lookup for an in-bounds position.
    pub fn region_at(&self, pos: Pos) -> RegionId {
        RegionId::ALL[(self.region_map[pos.cell_index()] - 1) as usize]
    }

    pub fn order(&self, id: OrderId) -> Option<&Order> {
        self.orders.get(&id)
    }

    pub fn orders(&self) -> impl Iterator<Item = &Order> {
        self.orders.values()
    }

    pub fn live_order_count(&self) -> usize {
        self.orders.len()
    }

    /// Live orders located in `region` awaiting an agent of `level`.
    pub fn live_count(&self, region: RegionId, level: u8) -> u32 {
        self.live_counts[region.index()][(level - 1) as usize]
    }

    pub fn live_in_region(&self, region: RegionId) -> u32 {
        self.live_counts[region.index()].iter().sum()
    }

    fn insert(&mut self, order: Order) {
        self.live_counts[order.region.index()][(order.stage_level - 1) as usize] += 1;
        self.cells[order.position.cell_index()].push(order.id);
        self.orders.insert(order.id, order);
    }

    /// Removes a live order from every index and hands it back.
    pub fn take_order(&mut self, id: OrderId) -> Option<Order> {
        let order = self.orders.remove(&id)?;
        self.live_counts[order.region.index()][(order.stage_level - 1) as usize] -= 1;
        let cell = &mut self.cells[order.position.cell_index()];
        if let Some(i) = cell.iter().position(|&o| o == id) {
            cell.swap_remove(i);
        }
        Some(order)
    }

    fn fresh_order_id(&mut self) -> OrderId {
        let id = OrderId(self.next_order);
        self.next_order += 1;
        id
    }

    /// Uniform cell on the scatter disc around `center`, clamped to the grid.
    fn scatter(&mut self, center: Pos) -> Pos {
        let r = self.profile.scatter_radius;
        loop {
            let dx = self.rng.gen_range(-r..=r);
            let dy = self.rng.gen_range(-r..=r);
            if dx * dx + dy * dy <= r * r {
                return Pos::new(center.x + dx, center.y + dy).clamped();
            }
        }
    }

    /// Tops every region's primary-order pool up to its trend target.
    pub fn replenish_orders(&mut self) -> Vec<OrderId> {
        let mut created = Vec::new();
        for region in RegionId::ALL {
            let target = target_order_count(region, self.tick, &self.profile);
            let live = self.live_count(region, 1) as u64;
            for _ in live..target {
                if let Some(cap) = self.profile.volume_cap {
                    if self.ledger.generated_chains >= cap {
                        return created;
                    }
                }
                created.push(self.spawn_primary(region));
            }
        }
        created
    }

    fn spawn_primary(&mut self, origin: RegionId) -> OrderId {
        let spec = region(origin);
        let position = self.scatter(spec.center);
        let complexity = match self.profile.complexity_mode {
            ComplexityMode::Region => spec.complexity,
            ComplexityMode::Random => self.rng.gen_range(1..=3),
        };
        let (lo, hi) = chain_value_range(complexity);
        let chain_value = self.rng.gen_range(lo..=hi) as f64;
        let id = self.fresh_order_id();
        let order = Order {
            id,
            chain_id: id,
            // primaries are counted against the region that generated them
            region: origin,
            stage_level: 1,
            remaining_stages: complexity - 1,
            position,
            chain_value,
            escrow: Vec::new(),
            born_tick: self.tick,
            expiry_tick: self.tick + self.profile.stage_lifetime,
        };
        self.ledger.generated_chains += 1;
        self.insert(order);
        id
    }

    /// Creates the next stage of a chain at `pos`. The parent must already be
    /// out of the live set (see [`World::take_order`]).
    pub fn spawn_derived_order(&mut self, parent: Order, pos: Pos) -> Result<OrderId, WorldError> {
        if parent.remaining_stages == 0 {
            return Err(WorldError::NoFurtherStage(parent.id));
        }
        if !pos.in_bounds() {
            return Err(WorldError::OutOfBounds(pos));
        }
        let id = self.fresh_order_id();
        let order = Order {
            id,
            chain_id: parent.chain_id,
            region: self.region_at(pos),
            stage_level: parent.stage_level + 1,
            remaining_stages: parent.remaining_stages - 1,
            position: pos,
            chain_value: parent.chain_value,
            escrow: parent.escrow,
            born_tick: self.tick,
            expiry_tick: self.tick + self.profile.stage_lifetime,
        };
        self.insert(order);
        Ok(id)
    }

    /// Removes every order whose expiry tick has come, voiding its escrow.
    pub fn step_order_lifecycle(&mut self) -> ExpiryReport {
        let now = self.tick;
        let expired: Vec<OrderId> = self
            .orders
            .values()
            .filter(|o| o.expiry_tick <= now)
            .map(|o| o.id)
            .collect();
        let mut report = ExpiryReport::default();
        for id in expired {
            let order = self.take_order(id).expect("listed order is live");
            report.voided_escrow += order.escrowed_value();
            report.expired_chains.push(order.chain_id);
        }
        self.ledger.expired_chains += report.expired_chains.len() as u64;
        self.ledger.voided_value += report.voided_escrow;
        report
    }

    /// Nearest live order of `level` within Euclidean `radius` of `from`
    /// whose cell satisfies `allowed`. Ties go to the lower order id.
    pub fn nearest_order(
        &self,
        from: Pos,
        radius: f64,
        level: u8,
        allowed: impl Fn(RegionId) -> bool,
    ) -> Option<OrderId> {
        let r = radius.floor() as i32;
        let r2 = radius * radius;
        let mut best: Option<(i64, OrderId)> = None;
        for y in (from.y - r).max(0)..=(from.y + r).min(GRID_HEIGHT - 1) {
            for x in (from.x - r).max(0)..=(from.x + r).min(GRID_WIDTH - 1) {
                let p = Pos::new(x, y);
                let d = from.dist2(p);
                if d as f64 > r2 {
                    continue;
                }
                let cell = &self.cells[p.cell_index()];
                if cell.is_empty() || !allowed(self.region_at(p)) {
                    continue;
                }
                for &id in cell {
                    if self.orders[&id].stage_level != level {
                        continue;
                    }
                    if best.map_or(true, |b| (d, id) < b) {
                        best = Some((d, id));
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Order of `level` within Chebyshev distance `reach` of `from`, nearest
    /// first by Euclidean distance then by id.
    pub fn claimable_order(
        &self,
        from: Pos,
        reach: i32,
        level: u8,
        allowed: impl Fn(RegionId) -> bool,
    ) -> Option<OrderId> {
        let mut best: Option<(i64, OrderId)> = None;
        for y in (from.y - reach).max(0)..=(from.y + reach).min(GRID_HEIGHT - 1) {
            for x in (from.x - reach).max(0)..=(from.x + reach).min(GRID_WIDTH - 1) {
                let p = Pos::new(x, y);
                let cell = &self.cells[p.cell_index()];
                if cell.is_empty() || !allowed(self.region_at(p)) {
                    continue;
                }
                let d = from.dist2(p);
                for &id in cell {
                    if self.orders[&id].stage_level == level && best.map_or(true, |b| (d, id) < b) {
                        best = Some((d, id));
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Test and audit hook: insert an order built by hand.
    pub fn insert_order_for_test(&mut self, mut order: Order) -> OrderId {
        order.id = self.fresh_order_id();
        if order.stage_level == 1 {
            order.chain_id = order.id;
            self.ledger.generated_chains += 1;
        }
        let id = order.id;
        self.insert(order);
        id
    }
}
