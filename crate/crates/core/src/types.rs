use std::fmt;

use serde::{Deserialize, Serialize};

pub const GRID_WIDTH: i32 = 250;
pub const GRID_HEIGHT: i32 = 120;

/// A grid cell. Valid cells are `[0, 249] x [0, 119]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(self) -> bool {
        (0..GRID_WIDTH).contains(&self.x) && (0..GRID_HEIGHT).contains(&self.y)
    }

    pub fn clamped(self) -> Self {
        Self {
            x: self.x.clamp(0, GRID_WIDTH - 1),
            y: self.y.clamp(0, GRID_HEIGHT - 1),
        }
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn dist2(self, other: Pos) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn euclid(self, other: Pos) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    /// Row-major cell index; only meaningful for in-bounds positions.
    pub(crate) fn cell_index(self) -> usize {
        (self.y * GRID_WIDTH + self.x) as usize
    }

    pub fn step_towards(self, target: Pos) -> Pos {
        Pos::new(
            self.x + (target.x - self.x).signum(),
            self.y + (target.y - self.y).signum(),
        )
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The two competing ecosystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcosystemId {
    Alpha,
    Beta,
}

impl EcosystemId {
    pub const ALL: [EcosystemId; 2] = [EcosystemId::Alpha, EcosystemId::Beta];

    pub fn index(self) -> usize {
        match self {
            EcosystemId::Alpha => 0,
            EcosystemId::Beta => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            EcosystemId::Alpha => EcosystemId::Beta,
            EcosystemId::Beta => EcosystemId::Alpha,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EcosystemId::Alpha => "alpha",
            EcosystemId::Beta => "beta",
        }
    }
}

impl fmt::Display for EcosystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Region id in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RegionId(u8);

impl RegionId {
    pub const ALL: [RegionId; 5] = [RegionId(1), RegionId(2), RegionId(3), RegionId(4), RegionId(5)];

    pub fn new(id: u8) -> Option<Self> {
        (1..=5).contains(&id).then_some(Self(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index for per-region arrays.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

impl TryFrom<u8> for RegionId {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        RegionId::new(v).ok_or_else(|| format!("region id {v} outside 1..=5"))
    }
}

impl From<RegionId> for u8 {
    fn from(r: RegionId) -> u8 {
        r.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
