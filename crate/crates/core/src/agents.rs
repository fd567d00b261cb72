//! Supply-side agents: perception, movement, claiming and processing orders,
//! reproduction with inherited and mutated traits, death, combat between
//! ecosystems and region expansion.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::{self, Hub, Routing, StrategyConfig, StrategyError};
use crate::types::{AgentId, EcosystemId, OrderId, Pos, RegionId};
use crate::world::{self, World, WorldError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("agent {0} has capital {1} below the reproduction threshold")]
    BelowReproductionThreshold(AgentId, f64),
    #[error("agent {agent} (level {agent_level}) cannot process a stage-{stage} order")]
    LevelMismatch { agent: AgentId, agent_level: u8, stage: u8 },
    #[error("no living agent {0}")]
    UnknownAgent(AgentId),
    #[error("no live order {0}")]
    UnknownOrder(OrderId),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

pub const TRAIT_MIN: u8 = 1;
pub const TRAIT_MAX: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialLevels {
    /// Every founding agent is a primary (level-1) node.
    Primary,
    /// Founding levels drawn uniformly from 1..=3.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionThreshold {
    pub agents: usize,
    pub capital: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub reproduction_threshold: f64,
    /// Capital charged per cell between parent and child.
    pub reproduction_punishment_k: f64,
    pub death_threshold: f64,
    /// Gate for regions 2 and 5.
    pub adjacent_expansion: ExpansionThreshold,
    /// Gate for region 3.
    pub emerging_expansion: ExpansionThreshold,
    pub initial_alpha: usize,
    pub initial_beta: usize,
    /// Inclusive range of founding and child endowments.
    pub initial_capital: (f64, f64),
    pub initial_levels: InitialLevels,
    /// Chebyshev distance at which an order can be claimed.
    pub claim_radius: i32,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            reproduction_threshold: 300.0,
            reproduction_punishment_k: 3.0,
            death_threshold: 0.0,
            adjacent_expansion: ExpansionThreshold { agents: 25, capital: 4000.0 },
            emerging_expansion: ExpansionThreshold { agents: 125, capital: 15000.0 },
            initial_alpha: 12,
            initial_beta: 14,
            initial_capital: (180.0, 220.0),
            initial_levels: InitialLevels::Primary,
            claim_radius: 1,
        }
    }
}

impl SimParams {
    pub fn initial_count(&self, eco: EcosystemId) -> usize {
        match eco {
            EcosystemId::Alpha => self.initial_alpha,
            EcosystemId::Beta => self.initial_beta,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("params.reproduction_threshold", self.reproduction_threshold),
            ("params.reproduction_punishment_k", self.reproduction_punishment_k),
            ("params.adjacent_expansion.capital", self.adjacent_expansion.capital),
            ("params.emerging_expansion.capital", self.emerging_expansion.capital),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} must be > 0"));
            }
        }
        if !(self.death_threshold >= 0.0) {
            return Err("params.death_threshold must be >= 0".into());
        }
        if self.death_threshold >= self.reproduction_threshold {
            return Err("params.death_threshold must be below params.reproduction_threshold".into());
        }
        let (lo, hi) = self.initial_capital;
        if !(lo > self.death_threshold && lo <= hi) {
            return Err("params.initial_capital must be an ordered range above the death threshold".into());
        }
        if self.adjacent_expansion.agents == 0 || self.emerging_expansion.agents == 0 {
            return Err("params.*_expansion.agents must be >= 1".into());
        }
        if self.claim_radius < 0 {
            return Err("params.claim_radius must be >= 0".into());
        }
        Ok(())
    }
}

/// Value gained and consumed by an agent during one tick.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Flow {
    pub gained: f64,
    pub consumed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    pub ecosystem: EcosystemId,
    pub level: u8,
    pub position: Pos,
    pub capital: f64,
    pub speed: u8,
    pub vision: u8,
    pub home_region: RegionId,
    pub born_tick: u64,
    /// Payouts earned since the last strategy period boundary.
    pub period_profit: f64,
    /// Per-tick flows over the trailing efficiency window, newest last.
    pub flows: VecDeque<Flow>,
}

impl Agent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: AgentId,
        ecosystem: EcosystemId,
        level: u8,
        position: Pos,
        capital: f64,
        speed: u8,
        vision: u8,
        born_tick: u64,
    ) -> Self {
        Self {
            id,
            ecosystem,
            level,
            position,
            capital,
            speed,
            vision,
            home_region: home_region(ecosystem),
            born_tick,
            period_profit: 0.0,
            flows: VecDeque::from([Flow::default()]),
        }
    }

    /// Opens a new flow slot, dropping slots older than `window` ticks.
    pub fn begin_tick(&mut self, window: usize) {
        self.flows.push_back(Flow::default());
        while self.flows.len() > window.max(1) {
            self.flows.pop_front();
        }
    }

    fn current_flow(&mut self) -> &mut Flow {
        if self.flows.is_empty() {
            self.flows.push_back(Flow::default());
        }
        self.flows.back_mut().expect("non-empty")
    }

    pub(crate) fn record_gain(&mut self, amount: f64) {
        self.current_flow().gained += amount;
        self.period_profit += amount;
    }

    /// Windowed totals `(gained, consumed)`.
    pub fn window_totals(&self) -> (f64, f64) {
        self.flows
            .iter()
            .fold((0.0, 0.0), |(g, c), f| (g + f.gained, c + f.consumed))
    }
}

pub fn home_region(eco: EcosystemId) -> RegionId {
    match eco {
        EcosystemId::Alpha => RegionId::ALL[0],
        EcosystemId::Beta => RegionId::ALL[3],
    }
}

/// One ecosystem: its living agents, strategy and cumulative ledgers.
#[derive(Debug, Clone, PartialEq)]
pub struct EcosystemState {
    pub id: EcosystemId,
    pub strategy: StrategyConfig,
    pub hub: Hub,
    pub agents: BTreeMap<AgentId, Agent>,
    pub unlocked: [bool; 5],
    /// Tick each region became available, if it has.
    pub unlock_ticks: [Option<u64>; 5],
    /// Capital spent on operation, movement and reproduction punishment.
    pub cum_cost: f64,
    /// Released payouts credited to the ecosystem.
    pub cum_gain: f64,
    /// Capital of founding agents.
    pub founding_capital: f64,
    /// Endowments moved from parents to children.
    pub child_endowments: f64,
    /// Residual capital of agents removed by the death check.
    pub writeoffs: f64,
    pub births: u64,
    pub deaths: u64,
    pub kills: u64,
    /// Rounding residue of the running totals above.
    pub(crate) carry: Carry,
}

/// Neumaier compensation terms, so long runs keep the ledger exact to well
/// under the audit tolerance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Carry {
    pub cost: f64,
    pub gain: f64,
    pub founding: f64,
    pub writeoffs: f64,
}

/// Adds `x` to `sum`, collecting the lost low-order bits in `carry`.
pub(crate) fn add_compensated(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    *carry += if sum.abs() >= x.abs() { (*sum - t) + x } else { (x - t) + *sum };
    *sum = t;
}

impl EcosystemState {
    pub fn new(id: EcosystemId, strategy: StrategyConfig, home: RegionId) -> Self {
        let mut unlocked = [false; 5];
        unlocked[home.index()] = true;
        let mut unlock_ticks = [None; 5];
        unlock_ticks[home.index()] = Some(0);
        Self {
            id,
            strategy,
            hub: Hub::default(),
            agents: BTreeMap::new(),
            unlocked,
            unlock_ticks,
            cum_cost: 0.0,
            cum_gain: 0.0,
            founding_capital: 0.0,
            child_endowments: 0.0,
            writeoffs: 0.0,
            births: 0,
            deaths: 0,
            kills: 0,
            carry: Carry::default(),
        }
    }

    pub fn is_unlocked(&self, region: RegionId) -> bool {
        self.unlocked[region.index()]
    }

    pub fn living_capital(&self) -> f64 {
        self.agents.values().map(|a| a.capital).sum()
    }

    /// Living capital plus whatever the hub is holding.
    pub fn total_capital(&self) -> f64 {
        self.living_capital() + self.hub.pool
    }

    pub fn count_by_level(&self) -> [usize; 3] {
        let mut n = [0; 3];
        for a in self.agents.values() {
            n[(a.level - 1) as usize] += 1;
        }
        n
    }

    /// Deducts `amount` from an agent and books it as ecosystem cost.
    fn charge(&mut self, id: AgentId, amount: f64) {
        let agent = self.agents.get_mut(&id).expect("charged agent is alive");
        agent.capital -= amount;
        agent.current_flow().consumed += amount;
        add_compensated(&mut self.cum_cost, &mut self.carry.cost, amount);
    }

    /// Compensated totals: (cost, gain, founding, writeoffs).
    pub(crate) fn exact_totals(&self) -> (f64, f64, f64, f64) {
        let c = &self.carry;
        (
            self.cum_cost + c.cost,
            self.cum_gain + c.gain,
            self.founding_capital + c.founding,
            self.writeoffs + c.writeoffs,
        )
    }
}

fn draw_trait(rng: &mut impl Rng) -> u8 {
    rng.gen_range(TRAIT_MIN..=TRAIT_MAX)
}

/// Inherited trait with a uniform -1/0/+1 mutation, clamped to the trait range.
pub fn mutate_trait(parent: u8, delta: i8) -> u8 {
    (parent as i16 + delta as i16).clamp(TRAIT_MIN as i16, TRAIT_MAX as i16) as u8
}

/// Level for a newborn: the unlocked stage level with the most outstanding
/// orders per living agent of that level (ties go to the lower level).
pub fn child_level(eco: &EcosystemState, world: &World) -> u8 {
    let max_level = RegionId::ALL
        .iter()
        .filter(|&&r| eco.is_unlocked(r))
        .map(|&r| world::region(r).complexity)
        .max()
        .unwrap_or(1);
    let by_level = eco.count_by_level();
    let mut best = (1u8, f64::NEG_INFINITY);
    for level in 1..=max_level {
        let outstanding: u32 = RegionId::ALL
            .iter()
            .filter(|&&r| eco.is_unlocked(r))
            .map(|&r| world.live_count(r, level))
            .sum();
        let score = outstanding as f64 / (1 + by_level[(level - 1) as usize]) as f64;
        if score > best.1 {
            best = (level, score);
        }
    }
    best.0
}

/// Creates a founding agent (no parent) or a child of `parent`.
pub fn spawn_agent(
    eco: &mut EcosystemState,
    parent: Option<AgentId>,
    world: &mut World,
    params: &SimParams,
) -> Result<AgentId, AgentError> {
    let (lo, hi) = params.initial_capital;
    let tick = world.tick();
    let agent = match parent {
        None => {
            let home = home_region(eco.id);
            let center = world::region(home).center;
            let radius = world.profile().scatter_radius;
            let position = loop {
                let dx = world.rng().gen_range(-radius..=radius);
                let dy = world.rng().gen_range(-radius..=radius);
                let p = Pos::new(center.x + dx, center.y + dy).clamped();
                if dx * dx + dy * dy <= radius * radius && world.region_at(p) == home {
                    break p;
                }
            };
            let level = match params.initial_levels {
                InitialLevels::Primary => 1,
                InitialLevels::Random => world.rng().gen_range(1..=3),
            };
            let capital = world.rng().gen_range(lo..=hi);
            let speed = draw_trait(world.rng());
            let vision = draw_trait(world.rng());
            add_compensated(&mut eco.founding_capital, &mut eco.carry.founding, capital);
            let id = world.next_agent_id();
            Agent::new(id, eco.id, level, position, capital, speed, vision, tick)
        }
        Some(pid) => {
            let p = eco.agents.get(&pid).ok_or(AgentError::UnknownAgent(pid))?.clone();
            if p.capital < params.reproduction_threshold {
                return Err(AgentError::BelowReproductionThreshold(pid, p.capital));
            }
            let level = child_level(eco, world);
            let r = p.vision as i32;
            let mut cells = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    let c = Pos::new(p.position.x + dx, p.position.y + dy);
                    if dx * dx + dy * dy <= r * r && c.in_bounds() && eco.is_unlocked(world.region_at(c)) {
                        cells.push(c);
                    }
                }
            }
            let position = if cells.is_empty() {
                p.position
            } else {
                cells[world.rng().gen_range(0..cells.len())]
            };
            let speed = mutate_trait(p.speed, world.rng().gen_range(-1..=1));
            let vision = mutate_trait(p.vision, world.rng().gen_range(-1..=1));
            let endowment = world.rng().gen_range(lo..=hi);
            let punishment = params.reproduction_punishment_k * p.position.euclid(position);
            eco.agents.get_mut(&pid).expect("parent").capital -= endowment;
            eco.child_endowments += endowment;
            eco.charge(pid, punishment);
            eco.births += 1;
            let id = world.next_agent_id();
            Agent::new(id, eco.id, level, position, endowment, speed, vision, tick)
        }
    };
    let id = agent.id;
    eco.agents.insert(id, agent);
    Ok(id)
}

/// What happened when an agent claimed and processed an order.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessOutcome {
    /// Stage done; the chain continues as a new order.
    Derived { next: OrderId },
    /// Last stage done; escrow released.
    Completed { chain: OrderId, released: f64, forfeited: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionRecord {
    pub agent: AgentId,
    pub ecosystem: EcosystemId,
    pub op_cost: f64,
    pub cells_moved: u32,
    pub move_cost: f64,
    pub claimed: Option<OrderId>,
    pub outcome: Option<ProcessOutcome>,
}

fn eco_pair(ecos: &mut [EcosystemState; 2], id: EcosystemId) -> &mut EcosystemState {
    &mut ecos[id.index()]
}

/// One agent's turn: pay operation cost, move toward the nearest visible
/// order of its level (or wander), pay for the distance, and claim an order
/// within reach.
pub fn agent_tick(
    world: &mut World,
    ecos: &mut [EcosystemState; 2],
    eco_id: EcosystemId,
    id: AgentId,
    params: &SimParams,
) -> Result<ActionRecord, AgentError> {
    let (start, level, speed, vision) = {
        let a = ecos[eco_id.index()]
            .agents
            .get(&id)
            .ok_or(AgentError::UnknownAgent(id))?;
        (a.position, a.level, a.speed, a.vision)
    };
    let eco = eco_pair(ecos, eco_id);
    let here = world.region_at(start);
    let (lo, hi) = world::region(here).op_cost_range;
    let op_cost = world.rng().gen_range(lo..=hi);
    eco.charge(id, op_cost);

    let unlocked = eco.unlocked;
    let allowed = move |r: RegionId| unlocked[r.index()];
    let mut path = Vec::new();
    if !allowed(here) {
        // stranded: head for the nearest unlocked region center
        let target = RegionId::ALL
            .iter()
            .filter(|&&r| allowed(r))
            .map(|&r| world::region(r).center)
            .min_by_key(|c| start.dist2(*c))
            .unwrap_or(start);
        let mut p = start;
        for _ in 0..speed {
            if p == target || allowed(world.region_at(p)) {
                break;
            }
            p = p.step_towards(target);
            path.push(p);
        }
    } else if let Some(oid) = world.nearest_order(start, vision as f64, level, allowed) {
        let target = world.order(oid).expect("live").position;
        let mut p = start;
        for _ in 0..speed {
            if p.chebyshev(target) <= params.claim_radius {
                break;
            }
            let dx = (target.x - p.x).signum();
            let dy = (target.y - p.y).signum();
            let next = [(dx, dy), (dx, 0), (0, dy)]
                .into_iter()
                .filter(|&(sx, sy)| sx != 0 || sy != 0)
                .map(|(sx, sy)| Pos::new(p.x + sx, p.y + sy))
                .find(|c| c.in_bounds() && allowed(world.region_at(*c)));
            match next {
                Some(c) => {
                    p = c;
                    path.push(c);
                }
                None => break,
            }
        }
    } else {
        let mut options = Vec::with_capacity(8);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let c = Pos::new(start.x + dx, start.y + dy);
                if (dx, dy) != (0, 0) && c.in_bounds() && allowed(world.region_at(c)) {
                    options.push(c);
                }
            }
        }
        if !options.is_empty() {
            let pick = options[world.rng().gen_range(0..options.len())];
            path.push(pick);
        }
    }

    let move_cost: f64 = path
        .iter()
        .map(|&c| world::region(world.region_at(c)).distance_cost_k)
        .sum();
    if let Some(&end) = path.last() {
        eco.agents.get_mut(&id).expect("alive").position = end;
    }
    if move_cost > 0.0 {
        eco.charge(id, move_cost);
    }
    let end = path.last().copied().unwrap_or(start);

    let unlocked = eco.unlocked;
    let claimed = world.claimable_order(end, params.claim_radius, level, |r| unlocked[r.index()]);
    let outcome = match claimed {
        Some(oid) => Some(process_order(world, ecos, eco_id, id, oid)?),
        None => None,
    };
    Ok(ActionRecord {
        agent: id,
        ecosystem: eco_id,
        op_cost,
        cells_moved: path.len() as u32,
        move_cost,
        claimed,
        outcome,
    })
}

/// Processes a claimed order: escrows this stage's payout, then either
/// derives the next stage at the agent's position or releases the escrow.
pub fn process_order(
    world: &mut World,
    ecos: &mut [EcosystemState; 2],
    eco_id: EcosystemId,
    id: AgentId,
    order_id: OrderId,
) -> Result<ProcessOutcome, AgentError> {
    let (level, pos) = {
        let a = ecos[eco_id.index()]
            .agents
            .get(&id)
            .ok_or(AgentError::UnknownAgent(id))?;
        (a.level, a.position)
    };
    let order = world.order(order_id).ok_or(AgentError::UnknownOrder(order_id))?;
    if order.stage_level != level {
        return Err(AgentError::LevelMismatch {
            agent: id,
            agent_level: level,
            stage: order.stage_level,
        });
    }
    let mut order = world.take_order(order_id).expect("checked live");
    let payout = order.stage_payout();
    order.escrow.push(world::EscrowEntry { agent: id, ecosystem: eco_id, payout });
    if order.remaining_stages > 0 {
        let next = world.spawn_derived_order(order, pos)?;
        return Ok(ProcessOutcome::Derived { next });
    }
    let mut released = 0.0;
    let mut forfeited = 0.0;
    for entry in &order.escrow {
        match strategy::route_payout(eco_pair(ecos, entry.ecosystem), entry.agent, entry.payout)? {
            Routing::Forfeited => forfeited += entry.payout,
            Routing::Credited | Routing::Pooled => released += entry.payout,
        }
    }
    world.ledger.completed_chains += 1;
    world.ledger.released_value += released;
    world.ledger.forfeited_value += forfeited;
    Ok(ProcessOutcome::Completed { chain: order.chain_id, released, forfeited })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KillEvent {
    pub killer: AgentId,
    pub killer_eco: EcosystemId,
    pub victim: AgentId,
    pub victim_eco: EcosystemId,
    pub absorbed: f64,
}

/// Agents of different ecosystems within Chebyshev distance 1 fight; the
/// strictly richer one kills the other and takes its capital.
pub fn resolve_combat(ecos: &mut [EcosystemState; 2]) -> Vec<KillEvent> {
    let mut beta_cells: HashMap<Pos, Vec<AgentId>> = HashMap::new();
    for a in ecos[1].agents.values() {
        beta_cells.entry(a.position).or_default().push(a.id);
    }
    // (weaker id, stronger id, alpha id, beta id)
    let mut pairs = Vec::new();
    for a in ecos[0].agents.values() {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let c = Pos::new(a.position.x + dx, a.position.y + dy);
                let Some(ids) = beta_cells.get(&c) else { continue };
                for &b in ids {
                    let bc = ecos[1].agents[&b].capital;
                    if a.capital > bc {
                        pairs.push((b, a.id, a.id, b));
                    } else if bc > a.capital {
                        pairs.push((a.id, b, a.id, b));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    let mut kills = Vec::new();
    for (_, _, aid, bid) in pairs {
        let (Some(ac), Some(bc)) = (
            ecos[0].agents.get(&aid).map(|a| a.capital),
            ecos[1].agents.get(&bid).map(|b| b.capital),
        ) else {
            continue;
        };
        let (killer_eco, killer, victim_eco, victim) = if ac > bc {
            (EcosystemId::Alpha, aid, EcosystemId::Beta, bid)
        } else if bc > ac {
            (EcosystemId::Beta, bid, EcosystemId::Alpha, aid)
        } else {
            continue;
        };
        let dead = ecos[victim_eco.index()].agents.remove(&victim).expect("alive");
        ecos[victim_eco.index()].deaths += 1;
        let k = &mut ecos[killer_eco.index()];
        k.agents.get_mut(&killer).expect("alive").capital += dead.capital;
        k.kills += 1;
        kills.push(KillEvent { killer, killer_eco, victim, victim_eco, absorbed: dead.capital });
    }
    kills
}

#[derive(Debug, Clone, PartialEq)]
pub enum LifeEvent {
    Birth { parent: AgentId, child: AgentId, level: u8 },
    Death { agent: AgentId, writeoff: f64 },
}

/// Reproduction and death checks, in agent-id order.
pub fn lifecycle(
    eco: &mut EcosystemState,
    world: &mut World,
    params: &SimParams,
) -> Result<Vec<LifeEvent>, AgentError> {
    let ids: Vec<AgentId> = eco.agents.keys().copied().collect();
    let mut events = Vec::new();
    for id in ids {
        if eco.agents[&id].capital >= params.reproduction_threshold {
            let child = spawn_agent(eco, Some(id), world, params)?;
            let level = eco.agents[&child].level;
            events.push(LifeEvent::Birth { parent: id, child, level });
        }
        if eco.agents[&id].capital <= params.death_threshold {
            let dead = eco.agents.remove(&id).expect("alive");
            add_compensated(&mut eco.writeoffs, &mut eco.carry.writeoffs, dead.capital);
            eco.deaths += 1;
            events.push(LifeEvent::Death { agent: id, writeoff: dead.capital });
        }
    }
    Ok(events)
}

/// Unlocks adjacent and emerging regions once the ecosystem is large and
/// rich enough. Unlocks are permanent.
pub fn try_expand(eco: &mut EcosystemState, params: &SimParams, tick: u64) -> Vec<RegionId> {
    let count = eco.agents.len();
    let capital = eco.total_capital();
    let gates = [
        (params.adjacent_expansion, [1usize, 4].as_slice()),
        (params.emerging_expansion, [2usize].as_slice()),
    ];
    let mut opened = Vec::new();
    for (gate, regions) in gates {
        if count >= gate.agents && capital >= gate.capital {
            for &i in regions {
                if !eco.unlocked[i] {
                    eco.unlocked[i] = true;
                    eco.unlock_ticks[i] = Some(tick);
                    opened.push(RegionId::from_index(i));
                }
            }
        }
    }
    opened
}
