//! Analytic report over a niche census: entropy against its bounds, the
//! cost-optimal partition for the census size, and optionally the demand
//! level separating the two operating modes.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::entropy::{self, CostModel, EntropyError, NicheDistribution};
use crate::export;
use crate::types::EcosystemId;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("census is empty")]
    EmptyCensus,
    #[error("census line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("run census: {0}")]
    RunCensus(String),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

/// Parses `niche,count` lines. Blank lines, `#` comments and a header row
/// whose count column is not a number are skipped.
pub fn parse_census(text: &str) -> Result<Vec<(String, u64)>, AnalyzeError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, count) = line.split_once(',').ok_or_else(|| AnalyzeError::Parse {
            line: i + 1,
            message: "expected `niche,count`".into(),
        })?;
        match count.trim().parse::<u64>() {
            Ok(c) => rows.push((name.trim().to_string(), c)),
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(_) => {
                return Err(AnalyzeError::Parse {
                    line: i + 1,
                    message: format!("bad count `{}`", count.trim()),
                })
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeReport {
    pub control_niches: f64,
    pub random_niches: f64,
    pub dividing_point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub nodes: u64,
    pub niches: usize,
    pub k: f64,
    pub entropy: f64,
    pub max_entropy: f64,
    pub management_cost: f64,
    pub matching_cost: f64,
    pub cost: f64,
    pub optimal_niches: f64,
    pub optimal_integer_niches: u64,
    pub min_cost: f64,
    pub optimal_entropy: f64,
    pub at_optimum: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_benefit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModeReport>,
}

pub fn analyze(
    census: &[(String, u64)],
    k: f64,
    total_gain: Option<f64>,
    modes: Option<(f64, f64)>,
) -> Result<AnalyticReport, AnalyzeError> {
    let dist: NicheDistribution = census.iter().map(|(_, c)| *c).collect();
    if dist.total() == 0 {
        return Err(AnalyzeError::EmptyCensus);
    }
    let nodes = dist.total();
    let n = nodes as f64;
    let niches = dist.occupied_classes();
    let h = entropy::shannon_entropy(&dist)?;
    let cost = entropy::operating_cost(&CostModel::new(k, n, niches as f64)?)?;
    let opt = entropy::optimal_partition(k, n)?;
    let (m_int, _) = entropy::integer_optimum(k, nodes)?;
    let modes = match modes {
        Some((ma, mb)) => Some(ModeReport {
            control_niches: ma,
            random_niches: mb,
            dividing_point: entropy::demand_dividing_point(n, ma, mb)?,
        }),
        None => None,
    };
    Ok(AnalyticReport {
        nodes,
        niches,
        k,
        entropy: h,
        max_entropy: entropy::max_entropy(niches)?,
        management_cost: cost.management,
        matching_cost: cost.matching,
        cost: cost.total,
        optimal_niches: opt.niches,
        optimal_integer_niches: m_int,
        min_cost: opt.min_cost,
        optimal_entropy: opt.entropy,
        at_optimum: (cost.total - opt.min_cost).abs() <= 1e-9,
        value_benefit: total_gain.map(|g| entropy::value_benefit(g, cost.total)),
        modes,
    })
}

/// True when `text` is a `census.csv` written by a run.
pub fn is_run_census(text: &str) -> bool {
    text.lines().next() == Some(export::census_header().as_str())
}

/// One ecosystem's (level, region) niches from a run's `census.csv`, at
/// `tick` or at the last tick present.
pub fn run_census(text: &str, eco: EcosystemId, tick: Option<u64>) -> Result<Vec<(String, u64)>, AnalyzeError> {
    let rows = export::parse_census_csv(text).map_err(|e| AnalyzeError::RunCensus(e.to_string()))?;
    let tick = match tick.or_else(|| rows.iter().map(|r| r.tick).max()) {
        Some(t) => t,
        None => return Err(AnalyzeError::EmptyCensus),
    };
    let row = rows
        .iter()
        .find(|r| r.tick == tick && r.ecosystem == eco)
        .ok_or_else(|| AnalyzeError::RunCensus(format!("no {eco} row at tick {tick}")))?;
    Ok(row
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (format!("l{}_r{}", i / 5 + 1, i % 5 + 1), c))
        .collect())
}

pub fn to_json(report: &AnalyticReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

impl fmt::Display for AnalyticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes             {}", self.nodes)?;
        writeln!(f, "niches            {}", self.niches)?;
        writeln!(f, "entropy H         {:.6} bits", self.entropy)?;
        writeln!(f, "max entropy       {:.6} bits", self.max_entropy)?;
        writeln!(
            f,
            "operating cost    {:.6} (management {:.6}, matching {:.6})",
            self.cost, self.management_cost, self.matching_cost
        )?;
        writeln!(
            f,
            "optimal niches    {:.6} (best integer {})",
            self.optimal_niches, self.optimal_integer_niches
        )?;
        writeln!(f, "minimum cost      {:.6}", self.min_cost)?;
        writeln!(f, "optimal entropy   {:.6} bits", self.optimal_entropy)?;
        if self.at_optimum {
            writeln!(f, "status            at optimum")?;
        } else {
            writeln!(f, "status            {:.6} above minimum", self.cost - self.min_cost)?;
        }
        if let Some(v) = self.value_benefit {
            writeln!(f, "value benefit     {v:.6}")?;
        }
        if let Some(m) = &self.modes {
            writeln!(
                f,
                "dividing demand   {:.6} (control niches {}, random niches {})",
                m.dividing_point, m.control_niches, m.random_niches
            )?;
        }
        Ok(())
    }
}
