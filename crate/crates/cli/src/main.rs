use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ecoentropy::metrics::NicheMode;
use ecoentropy::scenario::{self, Preset, ScenarioConfig};
use ecoentropy::{analyze, export, sim, sweep, EcosystemId};

/// Value-entropy analytics and two-ecosystem market simulation.
#[derive(Parser)]
#[command(name = "ecoentropy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and export its metrics.
    Run {
        #[arg(long, default_value = "case1")]
        preset: String,
        /// TOML file merged over the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        niche: Option<NicheMode>,
        /// Also write events.csv.
        #[arg(long)]
        events: bool,
    },
    /// Run a scenario over many seeds and report how often each conclusion holds.
    Sweep {
        #[arg(long, default_value = "case1")]
        preset: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed list: `1..10` (inclusive) or `1,5,9`.
        #[arg(long, default_value = "1..10")]
        seeds: String,
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        niche: Option<NicheMode>,
        /// Worker threads (defaults to available cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Analytic report for a niche census file of `niche,count` rows.
    Analyze {
        #[arg(long)]
        census: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Niche count under control-dominated operation.
        #[arg(long, requires = "mb")]
        ma: Option<f64>,
        /// Niche count under random-dominated operation.
        #[arg(long, requires = "ma")]
        mb: Option<f64>,
        /// Ecosystem to read from a run's census.csv.
        #[arg(long, default_value = "alpha")]
        ecosystem: EcosystemArg,
        /// Tick to read from a run's census.csv (defaults to the last).
        #[arg(long)]
        tick: Option<u64>,
        /// Total value gained, to report value benefit.
        #[arg(long)]
        gain: Option<f64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EcosystemArg {
    Alpha,
    Beta,
}

impl From<EcosystemArg> for EcosystemId {
    fn from(e: EcosystemArg) -> Self {
        match e {
            EcosystemArg::Alpha => EcosystemId::Alpha,
            EcosystemArg::Beta => EcosystemId::Beta,
        }
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().trim_start_matches('=').parse().context("seed range end")?;
        if b < a {
            bail!("empty seed range {spec}");
        }
        return Ok((a..=b).collect());
    }
    let seeds = spec
        .split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        bail!("no seeds given");
    }
    Ok(seeds)
}

fn load(preset: &str, config: Option<&PathBuf>) -> Result<ScenarioConfig> {
    let preset: Preset = preset.parse()?;
    Ok(match config {
        Some(path) => scenario::load_scenario_over(path, preset)?,
        None => preset.config(),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("ECOENTROPY_LOG", "warn")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { preset, config, seed, ticks, out, niche, events } => {
            let mut cfg = load(&preset, config.as_ref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = ticks {
                cfg.ticks = t;
            }
            if let Some(n) = niche {
                cfg.niche.mode = n;
            }
            cfg.output.events |= events;
            cfg.validate()?;
            log::info!("running {} seed {} for {} ticks", cfg.name, cfg.seed, cfg.ticks);
            let output = sim::run(cfg)?;
            for path in export::export(&output, &out)? {
                log::info!("wrote {}", path.display());
            }
            let s = &output.summary;
            println!(
                "alpha: n={} H={:.4} C={:.1} V={:.1}",
                s.alpha.n_agents, s.alpha.entropy, s.alpha.cum_cost, s.alpha.value_benefit
            );
            println!(
                "beta:  n={} H={:.4} C={:.1} V={:.1}",
                s.beta.n_agents, s.beta.entropy, s.beta.cum_cost, s.beta.value_benefit
            );
            Ok(())
        }
        Command::Sweep { preset, config, seeds, ticks, out, niche, jobs } => {
            let mut cfg = load(&preset, config.as_ref())?;
            if let Some(t) = ticks {
                cfg.ticks = t;
            }
            if let Some(n) = niche {
                cfg.niche.mode = n;
            }
            cfg.validate()?;
            let seeds = parse_seeds(&seeds)?;
            let report = sweep::sweep_to_dir(&cfg, &seeds, &out, jobs.unwrap_or_else(sweep::default_workers))?;
            for s in &report.seeds {
                match (&s.finals, &s.error) {
                    (Some(f), _) => println!(
                        "seed {:>4}: H a/b {:.3}/{:.3}  C a/b {:.0}/{:.0}  V a/b {:.0}/{:.0}",
                        s.seed, f.entropy_alpha, f.entropy_beta, f.cost_alpha, f.cost_beta, f.value_alpha, f.value_beta
                    ),
                    (None, Some(e)) => println!("seed {:>4}: INVALID {e}", s.seed),
                    (None, None) => println!("seed {:>4}: INVALID", s.seed),
                }
            }
            let f = report.fractions;
            println!("valid runs: {}/{}", report.valid_runs, report.seeds.len());
            println!("closer-to-optimum wins:   {:.2}", f.closer_to_optimum_wins);
            println!("random wins (stable):     {:.2}", f.random_wins_stable);
            println!("control wins (explosive): {:.2}", f.control_wins_explosive);
            if report.valid_runs < report.seeds.len() {
                bail!("{} run(s) invalid", report.seeds.len() - report.valid_runs);
            }
            Ok(())
        }
        Command::Analyze { census, k, ma, mb, ecosystem, tick, gain, json } => {
            let text = std::fs::read_to_string(&census).with_context(|| format!("reading {}", census.display()))?;
            let rows = if analyze::is_run_census(&text) {
                analyze::run_census(&text, ecosystem.into(), tick)?
            } else {
                analyze::parse_census(&text)?
            };
            let modes = ma.zip(mb);
            let report = analyze::analyze(&rows, k, gain, modes)?;
            if json {
                println!("{}", analyze::to_json(&report));
            } else {
                print!("{report}");
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_specs() {
        assert_eq!(parse_seeds("1..10").unwrap(), (1..=10).collect::<Vec<_>>());
        assert_eq!(parse_seeds("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("4,2").unwrap(), vec![4, 2]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("a").is_err());
    }
}
