//! Value-entropy analytics and a deterministic simulator of two competing
//! service ecosystems.
//!
//! [`entropy`] holds the closed-form model: niche entropy, operating cost as
//! management plus matching cost, the cost-optimal niche count and the demand
//! level at which control-dominated and random-dominated operation cost the
//! same. The remaining modules build an agent-based market on a 250x120 grid
//! where a control-dominated ecosystem (alpha) and a random-dominated one
//! (beta) compete for staged orders, and measure their entropy, cumulative
//! cost and value benefit tick by tick.

pub mod agents;
pub mod analyze;
pub mod entropy;
pub mod export;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod strategy;
pub mod sweep;
pub mod types;
pub mod world;

pub use scenario::{Preset, ScenarioConfig};
pub use sim::{run, RunOutput, Simulation};
pub use types::{AgentId, EcosystemId, OrderId, Pos, RegionId};
