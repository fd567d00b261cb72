use ecoentropy::agents::{self, EcosystemState, ProcessOutcome, SimParams};
use ecoentropy::entropy::{self, NicheDistribution};
use ecoentropy::export;
use ecoentropy::metrics::{self, NicheMode};
use ecoentropy::sim::EventKind;
use ecoentropy::strategy::{StrategyConfig, StrategyKind};
use ecoentropy::world::{Order, RegionTrend, World};
use ecoentropy::{EcosystemId, OrderId, Pos, Preset, RegionId, ScenarioConfig, Simulation};

fn short(preset: Preset, seed: u64, ticks: u64) -> ScenarioConfig {
    let mut cfg = preset.config();
    cfg.seed = seed;
    cfg.ticks = ticks;
    cfg.output.events = true;
    cfg
}

#[test]
fn same_seed_same_event_log() {
    let a = ecoentropy::run(short(Preset::Case2, 7, 120)).unwrap();
    let b = ecoentropy::run(short(Preset::Case2, 7, 120)).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(export::metrics_csv(&a.metrics), export::metrics_csv(&b.metrics));
    assert_eq!(export::census_csv(&a.census), export::census_csv(&b.census));
    assert_eq!(export::summary_json(&a), export::summary_json(&b));
    let c = ecoentropy::run(short(Preset::Case2, 8, 120)).unwrap();
    assert_ne!(export::metrics_csv(&a.metrics), export::metrics_csv(&c.metrics));
}

#[test]
fn relabelled_agents_change_nothing_but_ids() {
    let cfg = short(Preset::Case1, 3, 150);
    let a = Simulation::new(cfg.clone()).unwrap().finish().unwrap();
    let b = Simulation::with_agent_id_base(cfg, 1_000_000).unwrap().finish().unwrap();
    assert_eq!(export::metrics_csv(&a.metrics), export::metrics_csv(&b.metrics));
    assert_eq!(export::census_csv(&a.census), export::census_csv(&b.census));
    assert_eq!(a.events.len(), b.events.len());
    for (x, y) in a.events.iter().zip(&b.events) {
        assert_eq!((x.tick, x.kind, x.ecosystem), (y.tick, y.kind, y.ecosystem));
        assert_eq!(x.agent.map(|id| id.0 + 1_000_000), y.agent.map(|id| id.0));
    }
    assert!(b.events.iter().filter_map(|e| e.agent).all(|id| id.0 >= 1_000_000));
}

#[test]
fn random_strategy_is_identity_on_flows() {
    let mut cfg = short(Preset::Case1, 11, 150);
    cfg.alpha = StrategyConfig::random();
    let with = Simulation::new(cfg.clone()).unwrap().finish().unwrap();
    let mut sim = Simulation::new(cfg).unwrap();
    sim.disable_strategy();
    let without = sim.finish().unwrap();
    assert_eq!(export::metrics_csv(&with.metrics), export::metrics_csv(&without.metrics));
    assert_eq!(export::summary_json(&with), export::summary_json(&without));
    assert_eq!(with.events, without.events);
}

fn capital_variance(eco: &EcosystemState) -> Option<f64> {
    let n = eco.agents.len();
    if n < 2 {
        return None;
    }
    let mean = eco.agents.values().map(|a| a.capital).sum::<f64>() / n as f64;
    Some(eco.agents.values().map(|a| (a.capital - mean).powi(2)).sum::<f64>() / n as f64)
}

#[test]
fn hub_lowers_capital_variance() {
    let mut wins = 0;
    for seed in 1..=10 {
        let mut sim = Simulation::new(short(Preset::Case1, seed, 150)).unwrap();
        let (mut lower, mut matched) = (0, 0);
        while !sim.is_finished() {
            sim.step().unwrap();
            let va = capital_variance(sim.ecosystem(EcosystemId::Alpha));
            let vb = capital_variance(sim.ecosystem(EcosystemId::Beta));
            if let (Some(va), Some(vb)) = (va, vb) {
                matched += 1;
                lower += (va < vb) as usize;
            }
        }
        wins += (2 * lower > matched) as usize;
    }
    assert!(wins >= 7, "control variance lower in only {wins}/10 seeds");
}

fn quiet_world() -> World {
    let mut demand = Preset::Case1.config().demand;
    demand.trends = vec![RegionTrend::stable(0.0, 0.0, 100); 5];
    World::new(demand, 1).unwrap()
}

#[test]
fn two_stage_chain_releases_its_value() {
    let mut world = quiet_world();
    let params = SimParams::default();
    let mut ecos = [
        EcosystemState::new(EcosystemId::Alpha, StrategyConfig::control(), RegionId::new(1).unwrap()),
        EcosystemState::new(EcosystemId::Beta, StrategyConfig::random(), RegionId::new(4).unwrap()),
    ];
    let beta = &mut ecos[1];
    let first = agents::spawn_agent(beta, None, &mut world, &params).unwrap();
    let second = agents::spawn_agent(beta, None, &mut world, &params).unwrap();
    let at = Pos::new(85, 26);
    for (id, level) in [(first, 1), (second, 2)] {
        let a = beta.agents.get_mut(&id).unwrap();
        a.level = level;
        a.position = at;
    }
    let capital: Vec<f64> = [first, second].iter().map(|id| beta.agents[id].capital).collect();
    let order = world.insert_order_for_test(Order {
        id: OrderId(0),
        chain_id: OrderId(0),
        region: RegionId::new(2).unwrap(),
        stage_level: 1,
        remaining_stages: 1,
        position: at,
        chain_value: 100.0,
        escrow: Vec::new(),
        born_tick: 0,
        expiry_tick: 50,
    });

    let next = match agents::process_order(&mut world, &mut ecos, EcosystemId::Beta, first, order).unwrap() {
        ProcessOutcome::Derived { next } => next,
        other => panic!("expected a derived stage, got {other:?}"),
    };
    let staged = world.order(next).unwrap();
    assert_eq!((staged.stage_level, staged.remaining_stages, staged.position), (2, 0, at));
    assert_eq!(ecos[1].cum_gain, 0.0);

    match agents::process_order(&mut world, &mut ecos, EcosystemId::Beta, second, next).unwrap() {
        ProcessOutcome::Completed { released, forfeited, .. } => assert_eq!((released, forfeited), (100.0, 0.0)),
        other => panic!("expected completion, got {other:?}"),
    }
    assert_eq!(ecos[1].agents[&first].capital - capital[0], 60.0);
    assert_eq!(ecos[1].agents[&second].capital - capital[1], 40.0);
    let report = metrics::ledger_audit(&world, &ecos).unwrap();
    assert_eq!(report.released_payouts, 100.0);
    assert_eq!(report.completed_chains, 1);
    assert_eq!(report.live_chains, 0);
}

#[test]
fn fresh_world_audit_is_all_endowment() {
    let sim = Simulation::new(short(Preset::Case1, 5, 10)).unwrap();
    let r = sim.audit().unwrap();
    assert!((r.founding_capital - r.living_capital).abs() < 1e-9);
    assert_eq!((r.released_payouts, r.cum_cost, r.writeoffs, r.hub_pools), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(sim.ecosystem(EcosystemId::Alpha).agents.len(), 12);
    assert_eq!(sim.ecosystem(EcosystemId::Beta).agents.len(), 14);
}

#[test]
fn corrupted_capital_is_caught() {
    let mut sim = Simulation::new(short(Preset::Case1, 5, 50)).unwrap();
    for _ in 0..20 {
        sim.step().unwrap();
    }
    let eco = sim.ecosystem_mut(EcosystemId::Alpha);
    let id = *eco.agents.keys().next().unwrap();
    eco.agents.get_mut(&id).unwrap().capital += 1.0;
    match sim.audit() {
        Err(metrics::AuditError::CapitalImbalance { delta, .. }) => assert!((delta.abs() - 1.0).abs() < 1e-6),
        other => panic!("expected imbalance, got {other:?}"),
    }
}

#[test]
fn attribute_entropy_starts_at_zero() {
    let mut cfg = short(Preset::Case1, 9, 1);
    cfg.niche.mode = NicheMode::Attribute;
    let out = ecoentropy::run(cfg).unwrap();
    assert_eq!(out.metrics.len(), 2);
    for r in &out.metrics {
        assert_eq!((r.tick, r.entropy), (0, 0.0));
    }
}

#[test]
fn run_invariants_hold() {
    let mut cfg = short(Preset::Case2, 4, 300);
    cfg.niche.mode = NicheMode::Attribute;
    let out = ecoentropy::run(cfg).unwrap();
    assert_eq!(out.metrics.len(), 600);
    for eco in EcosystemId::ALL {
        let rows: Vec<_> = out.series(eco).collect();
        for w in rows.windows(2) {
            assert_eq!(w[1].tick, w[0].tick + 1);
            assert!(w[1].cum_cost >= w[0].cum_cost);
            assert!(w[1].cum_gain >= w[0].cum_gain);
            assert!(w[1].births >= w[0].births && w[1].deaths >= w[0].deaths && w[1].kills >= w[0].kills);
        }
        for r in rows {
            assert_eq!(r.value_benefit, r.cum_gain - r.cum_cost);
            assert_eq!(r.n_agents, r.n_by_level.iter().sum::<usize>());
        }
    }
    for (r, c) in out.metrics.iter().zip(&out.census) {
        let classes = c.counts.iter().filter(|&&n| n > 0).count();
        if classes > 0 {
            assert!(r.entropy <= entropy::max_entropy(classes).unwrap() + 1e-12);
            let h = entropy::shannon_entropy(&NicheDistribution::new(c.counts.to_vec())).unwrap();
            assert_eq!(h, r.entropy);
        }
    }
}

#[test]
fn efficiency_entropy_within_bin_bound() {
    let out = ecoentropy::run(short(Preset::Case1, 2, 150)).unwrap();
    for r in &out.metrics {
        if r.n_agents > 0 {
            let bins = (r.n_agents as f64).sqrt().ceil() as usize;
            assert!(r.entropy >= 0.0 && r.entropy <= (bins as f64).log2() + 1e-12);
        }
    }
}

#[test]
fn exported_files_round_trip() {
    let out = ecoentropy::run(short(Preset::Case1, 6, 120)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = export::export(&out, dir.path()).unwrap();
    assert_eq!(written.len(), 4);
    let text = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), export::METRICS_HEADER);
    assert_eq!(export::parse_metrics_csv(&text).unwrap(), out.metrics);
    let census = std::fs::read_to_string(dir.path().join("census.csv")).unwrap();
    assert_eq!(export::parse_census_csv(&census).unwrap(), out.census);
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(events.lines().next().unwrap(), export::EVENTS_HEADER);
    assert_eq!(events.lines().count(), out.events.len() + 1);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let last_beta = out.final_record(EcosystemId::Beta).unwrap();
    assert_eq!(summary["summary"]["beta"]["value_benefit"].as_f64().unwrap(), last_beta.value_benefit);
    assert_eq!(summary["seed"].as_u64(), Some(6));

    let again = tempfile::tempdir().unwrap();
    export::export(&out, again.path()).unwrap();
    for f in ["metrics.csv", "census.csv", "events.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(again.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn early_case1_stays_home() {
    let mut sim = Simulation::new(short(Preset::Case1, 42, 80)).unwrap();
    while !sim.is_finished() {
        sim.step().unwrap();
        for eco in sim.ecosystems() {
            for a in eco.agents.values() {
                let r = sim.world().region_at(a.position);
                assert!(eco.is_unlocked(r), "{} agent {} in locked region {}", eco.id, a.id, r);
            }
        }
    }
    let out = sim.finish().unwrap();
    for eco in EcosystemId::ALL {
        let unlock = out.events.iter().filter(|e| e.kind == EventKind::Unlock && e.ecosystem == eco);
        for e in unlock {
            let row = out.series(eco).find(|r| r.tick == e.tick).unwrap();
            assert!(row.n_agents >= 25, "{eco} unlocked {} with {} agents", e.detail, row.n_agents);
        }
    }
}

#[test]
fn strategies_default_to_control_and_random() {
    let cfg = Preset::Case1.config();
    assert_eq!(cfg.alpha.kind, StrategyKind::Control);
    assert_eq!(cfg.beta.kind, StrategyKind::Random);
}
