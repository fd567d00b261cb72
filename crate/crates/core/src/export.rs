//! Run output files: `metrics.csv`, `census.csv`, optional `events.csv` and
//! `summary.json`. Floats are written with Rust's shortest round-trip
//! formatting, so parsing a file back yields the exact values.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{LedgerReport, MetricsRecord};
use crate::scenario::ScenarioConfig;
use crate::sim::{CensusRow, RunOutput, Summary};
use crate::types::EcosystemId;
use crate::world::OrderLedger;

pub const METRICS_HEADER: &str = "tick,ecosystem,n_agents,n_l1,n_l2,n_l3,entropy,cum_cost,cum_gain,value_benefit,hub_pool,orders_r1,orders_r2,orders_r3,orders_r4,orders_r5,births,deaths,kills";
pub const EVENTS_HEADER: &str = "tick,event,agent_id,ecosystem,detail";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn census_header() -> String {
    let mut h = String::from("tick,ecosystem");
    for level in 1..=3 {
        for region in 1..=5 {
            write!(h, ",l{level}_r{region}").unwrap();
        }
    }
    h
}

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 120);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.tick,
            r.ecosystem,
            r.n_agents,
            r.n_by_level[0],
            r.n_by_level[1],
            r.n_by_level[2],
            r.entropy,
            r.cum_cost,
            r.cum_gain,
            r.value_benefit,
            r.hub_pool
        )
        .unwrap();
        for o in r.orders_by_region {
            write!(out, ",{o}").unwrap();
        }
        writeln!(out, ",{},{},{}", r.births, r.deaths, r.kills).unwrap();
    }
    out
}

pub fn census_csv(rows: &[CensusRow]) -> String {
    let mut out = census_header();
    out.push('\n');
    for r in rows {
        write!(out, "{},{}", r.tick, r.ecosystem).unwrap();
        for c in r.counts {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn events_csv(out: &RunOutput) -> String {
    let mut s = String::from(EVENTS_HEADER);
    s.push('\n');
    for e in &out.events {
        let agent = e.agent.map(|a| a.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{},{}", e.tick, e.kind.name(), agent, e.ecosystem, e.detail).unwrap();
    }
    s
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    seed: u64,
    ticks: u64,
    summary: &'a Summary,
    ledger: &'a LedgerReport,
    order_ledger: &'a OrderLedger,
    config: &'a ScenarioConfig,
}

pub fn summary_json(out: &RunOutput) -> String {
    let file = SummaryFile {
        seed: out.config.seed,
        ticks: out.config.ticks,
        summary: &out.summary,
        ledger: &out.ledger,
        order_ledger: &out.order_ledger,
        config: &out.config,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("summary serializes");
    s.push('\n');
    s
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, ExportError> {
    fs::write(&path, contents).map_err(|source| ExportError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes every output file into `dir` (created if missing) and returns
/// the written paths.
pub fn export(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(|source| ExportError::Io { path: dir.to_path_buf(), source })?;
    let mut written = vec![
        write_file(dir.join("metrics.csv"), &metrics_csv(&out.metrics))?,
        write_file(dir.join("census.csv"), &census_csv(&out.census))?,
    ];
    if out.config.output.events {
        written.push(write_file(dir.join("events.csv"), &events_csv(out))?);
    }
    written.push(write_file(dir.join("summary.json"), &summary_json(out))?);
    Ok(written)
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: Option<&str>) -> Result<T, ExportError> {
    let raw = raw.ok_or_else(|| ExportError::Parse { line, message: format!("missing {name}") })?;
    raw.parse().map_err(|_| ExportError::Parse {
        line,
        message: format!("bad {name}: `{raw}`"),
    })
}

fn eco_field(line: usize, raw: Option<&str>) -> Result<EcosystemId, ExportError> {
    match raw {
        Some("alpha") => Ok(EcosystemId::Alpha),
        Some("beta") => Ok(EcosystemId::Beta),
        other => Err(ExportError::Parse { line, message: format!("bad ecosystem {other:?}") }),
    }
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRecord>, ExportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        _ => return Err(ExportError::Parse { line: 1, message: "unexpected header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let mut f = line.split(',');
        out.push(MetricsRecord {
            tick: field(n, "tick", f.next())?,
            ecosystem: eco_field(n, f.next())?,
            n_agents: field(n, "n_agents", f.next())?,
            n_by_level: [
                field(n, "n_l1", f.next())?,
                field(n, "n_l2", f.next())?,
                field(n, "n_l3", f.next())?,
            ],
            entropy: field(n, "entropy", f.next())?,
            cum_cost: field(n, "cum_cost", f.next())?,
            cum_gain: field(n, "cum_gain", f.next())?,
            value_benefit: field(n, "value_benefit", f.next())?,
            hub_pool: field(n, "hub_pool", f.next())?,
            orders_by_region: [
                field(n, "orders_r1", f.next())?,
                field(n, "orders_r2", f.next())?,
                field(n, "orders_r3", f.next())?,
                field(n, "orders_r4", f.next())?,
                field(n, "orders_r5", f.next())?,
            ],
            births: field(n, "births", f.next())?,
            deaths: field(n, "deaths", f.next())?,
            kills: field(n, "kills", f.next())?,
        });
    }
    Ok(out)
}

pub fn parse_census_csv(text: &str) -> Result<Vec<CensusRow>, ExportError> {
    let header = census_header();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(ExportError::Parse { line: 1, message: "unexpected header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let mut f = line.split(',');
        let tick = field(n, "tick", f.next())?;
        let ecosystem = eco_field(n, f.next())?;
        let mut counts = [0u64; 15];
        for c in counts.iter_mut() {
            *c = field(n, "count", f.next())?;
        }
        out.push(CensusRow { tick, ecosystem, counts });
    }
    Ok(out)
}
