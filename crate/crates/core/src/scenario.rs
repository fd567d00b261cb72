//! Scenario configuration: the two preset market cases and TOML files that
//! override them.
//!
//! A scenario file is a TOML table whose keys mirror [`ScenarioConfig`]. An
//! optional top-level `preset = "case1" | "case2"` picks the base (default
//! `case1`); every other key is deep-merged over that base. Unknown keys are
//! rejected. The normative key list lives in `docs/scenario.schema.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::SimParams;
use crate::metrics::NicheMode;
use crate::strategy::{StrategyConfig, StrategyKind};
use crate::world::{Burst, ComplexityMode, DemandProfile, RegionTrend};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown preset `{0}` (expected case1 or case2)")]
    UnknownPreset(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing scenario: {0}")]
    Parse(String),
    #[error("invalid field {field}: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Stable demand with small periodic fluctuation everywhere.
    Case1,
    /// Case 1 plus a demand burst in the emerging region from tick 280.
    Case2,
}

pub const BURST_TICK: u64 = 280;
pub const TREND_PERIOD: u32 = 100;

impl Preset {
    pub fn config(self) -> ScenarioConfig {
        let core = RegionTrend::stable(200.0, 25.0, TREND_PERIOD);
        let outer = RegionTrend::stable(225.0, 30.0, TREND_PERIOD);
        let mut trends = vec![core.clone(), outer.clone(), outer.clone(), core, outer];
        if self == Preset::Case2 {
            trends[2].bursts.push(Burst { tick: BURST_TICK, reference: 350.0 });
        }
        ScenarioConfig {
            name: self.name().to_string(),
            seed: 42,
            ticks: 400,
            niche: NicheConfig { mode: NicheMode::Efficiency, window: 20 },
            params: SimParams::default(),
            demand: DemandProfile {
                trends,
                volume_cap: None,
                scatter_radius: 25,
                stage_lifetime: 50,
                complexity_mode: ComplexityMode::Region,
                qos_preference: None,
            },
            alpha: StrategyConfig::control(),
            beta: StrategyConfig::random(),
            output: OutputConfig::default(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Case1 => "case1",
            Preset::Case2 => "case2",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "case1" => Ok(Preset::Case1),
            "case2" => Ok(Preset::Case2),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NicheConfig {
    pub mode: NicheMode,
    /// Trailing window, in ticks, for efficiency niches.
    pub window: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub events: bool,
}

/// Full parameterization of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub ticks: u64,
    pub niche: NicheConfig,
    pub params: SimParams,
    pub demand: DemandProfile,
    pub alpha: StrategyConfig,
    pub beta: StrategyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, message: &str| ConfigError::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        };
        if self.ticks == 0 {
            return Err(invalid("ticks", "must be >= 1"));
        }
        if self.niche.window == 0 {
            return Err(invalid("niche.window", "must be >= 1"));
        }
        for (name, s) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if s.hub_period == 0 {
                return Err(invalid(&format!("{name}.hub_period"), "must be >= 1"));
            }
        }
        self.params.validate().map_err(|m| split_field(&m))?;
        self.demand.validate().map_err(|e| split_field(&e.to_string()))?;
        Ok(())
    }

    /// Earliest demand burst, if the scenario has one.
    pub fn burst_tick(&self) -> Option<u64> {
        self.demand
            .trends
            .iter()
            .flat_map(|t| t.bursts.iter().map(|b| b.tick))
            .min()
    }

    pub fn strategy_kind(&self, eco: crate::types::EcosystemId) -> StrategyKind {
        match eco {
            crate::types::EcosystemId::Alpha => self.alpha.kind,
            crate::types::EcosystemId::Beta => self.beta.kind,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

fn split_field(message: &str) -> ConfigError {
    let message = message.trim_start_matches("invalid demand profile: ");
    let (field, rest) = message.split_once(' ').unwrap_or((message, ""));
    ConfigError::Invalid {
        field: field.to_string(),
        message: rest.to_string(),
    }
}

/// Where a scenario comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Preset(Preset),
    File(PathBuf),
}

pub fn load_scenario(source: &ScenarioSource) -> Result<ScenarioConfig, ConfigError> {
    match source {
        ScenarioSource::Preset(p) => Ok(p.config()),
        ScenarioSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            parse_scenario(&text, None)
        }
    }
}

/// Loads `path` merged over `base` (or over the preset the file names).
pub fn load_scenario_over(path: &Path, base: Preset) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, Some(base))
}

/// Parses scenario TOML. A `preset` key in the text wins over `default_base`.
pub fn parse_scenario(text: &str, default_base: Option<Preset>) -> Result<ScenarioConfig, ConfigError> {
    let mut overlay: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let base = match overlay.remove("preset") {
        Some(toml::Value::String(s)) => s.parse()?,
        Some(other) => {
            return Err(ConfigError::Invalid {
                field: "preset".into(),
                message: format!("expected a string, got {}", other.type_str()),
            })
        }
        None => default_base.unwrap_or(Preset::Case1),
    };
    let mut merged: toml::Table = toml::Table::try_from(base.config())
        .map_err(|e| ConfigError::Parse(e.to_string()))?;
    merge(&mut merged, overlay);
    let cfg: ScenarioConfig = toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
