//! Closed-form value-entropy analytics.
//!
//! Everything here is a pure function of its arguments: Shannon entropy over a
//! niche census, per-node value efficiency, the management/matching cost split
//! of an ecosystem partitioned into `m` niches, the cost-minimizing partition,
//! the two operating-mode cost curves and the demand level at which they cross.
//!
//! Niche counts `m` are real-valued wherever a formula allows it; `N / m` is a
//! real quotient, never floored.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("distribution is empty (total count is zero)")]
    EmptyDistribution,
    #[error("class count must be at least 1")]
    NoClasses,
    #[error("efficiency undefined: node consumed no value")]
    UndefinedEfficiency,
    #[error("niche count {m} outside [1, {n}]")]
    NicheCountOutOfRange { m: f64, n: f64 },
    #[error("cost coefficient must be positive, got {0}")]
    NonPositiveCoefficient(f64),
    #[error("system size must be at least 1, got {0}")]
    SystemTooSmall(f64),
    #[error("random-mode niche count must be at least 2, got {0}")]
    DegenerateRandomNiches(f64),
    #[error("negative quantity: {0}")]
    Negative(&'static str),
}

pub type Result<T> = std::result::Result<T, EntropyError>;

/// Census of node counts per niche class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NicheDistribution {
    counts: Vec<u64>,
}

impl NicheDistribution {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of classes with a nonzero count.
    pub fn occupied_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Class probabilities `N_j / N_total` for occupied classes only.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return Err(EntropyError::EmptyDistribution);
        }
        let total = total as f64;
        Ok(self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| c as f64 / total)
            .collect())
    }
}

impl FromIterator<u64> for NicheDistribution {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Value gained and consumed by one node over a window of ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyRecord {
    pub gained: f64,
    pub consumed: f64,
    pub window: u32,
}

/// Parameters of the two-part operating cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Cost per unit of time, `k > 0`.
    pub k: f64,
    /// System size (node count).
    pub nodes: f64,
    /// Niche count, `1 <= m <= N`.
    pub niches: f64,
}

impl CostModel {
    pub fn new(k: f64, nodes: f64, niches: f64) -> Result<Self> {
        let model = Self { k, nodes, niches };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        if !(self.nodes >= 1.0) {
            return Err(EntropyError::SystemTooSmall(self.nodes));
        }
        check_niches(self.niches, self.nodes)
    }
}

/// Operating cost split into its management and matching parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingCost {
    pub management: f64,
    pub matching: f64,
    pub total: f64,
}

/// The cost-minimizing partition of `N` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPartition {
    /// Real-valued extreme point `sqrt(N)`.
    pub niches: f64,
    pub min_cost: f64,
    /// Entropy of the optimal partition, `log2 sqrt(N)`.
    pub entropy: f64,
}

/// Niche counts and demand for comparing the two operating modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeComparison {
    /// Niche count under the control-dominated mode.
    pub control_niches: f64,
    /// Niche count under the random-dominated mode.
    pub random_niches: f64,
    /// Demand quantity (orders).
    pub demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCosts {
    pub control: f64,
    pub random: f64,
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(EntropyError::NonPositiveCoefficient(k))
    }
}

fn check_niches(m: f64, n: f64) -> Result<()> {
    if m >= 1.0 && m <= n {
        Ok(())
    } else {
        Err(EntropyError::NicheCountOutOfRange { m, n })
    }
}

/// `x log2 x`, with `0 log2 0 = 0`.
fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon entropy in bits of the census; empty classes contribute nothing.
pub fn shannon_entropy(dist: &NicheDistribution) -> Result<f64> {
    let probs = dist.probabilities()?;
    let h: f64 = probs.iter().map(|&p| -p * p.log2()).sum();
    // a single class sums to -0.0
    Ok(h.max(0.0))
}

/// Entropy of the uniform distribution over `n` classes.
pub fn max_entropy(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(EntropyError::NoClasses);
    }
    Ok((n as f64).log2())
}

pub fn value_efficiency(rec: &EfficiencyRecord) -> Result<f64> {
    if rec.consumed < 0.0 {
        return Err(EntropyError::Negative("consumed"));
    }
    if rec.consumed == 0.0 {
        return Err(EntropyError::UndefinedEfficiency);
    }
    Ok(rec.gained / rec.consumed)
}

pub fn operating_cost(model: &CostModel) -> Result<OperatingCost> {
    model.validate()?;
    let CostModel { k, nodes, niches } = *model;
    let management = k * xlog2x(nodes / niches);
    let matching = k * xlog2x(niches);
    Ok(OperatingCost {
        management,
        matching,
        total: management + matching,
    })
}

/// Net value benefit: total gain minus operating cost. May be negative.
pub fn value_benefit(total_gain: f64, cost: f64) -> f64 {
    total_gain - cost
}

pub fn optimal_partition(k: f64, nodes: f64) -> Result<OptimalPartition> {
    check_k(k)?;
    if !(nodes >= 1.0) {
        return Err(EntropyError::SystemTooSmall(nodes));
    }
    let m1 = nodes.sqrt();
    Ok(OptimalPartition {
        niches: m1,
        min_cost: 2.0 * k * xlog2x(m1),
        entropy: m1.log2(),
    })
}

/// Best integer niche count: whichever rounding of `sqrt(N)` costs less
/// (ties go to the floor). Returns `(m, cost)`.
pub fn integer_optimum(k: f64, nodes: u64) -> Result<(u64, f64)> {
    let n = nodes as f64;
    let m1 = optimal_partition(k, n)?.niches;
    let lo = (m1.floor() as u64).clamp(1, nodes);
    let hi = (m1.ceil() as u64).clamp(1, nodes);
    let cost_at = |m: u64| operating_cost(&CostModel::new(k, n, m as f64)?).map(|c| c.total);
    let (c_lo, c_hi) = (cost_at(lo)?, cost_at(hi)?);
    Ok(if c_hi < c_lo { (hi, c_hi) } else { (lo, c_lo) })
}

/// Costs of the control-dominated and random-dominated modes for `N` nodes.
pub fn mode_costs(k: f64, nodes: f64, cmp: &ModeComparison) -> Result<ModeCosts> {
    check_k(k)?;
    check_niches(cmp.control_niches, nodes)?;
    if cmp.random_niches < 1.0 {
        return Err(EntropyError::NicheCountOutOfRange {
            m: cmp.random_niches,
            n: f64::INFINITY,
        });
    }
    if cmp.demand < 0.0 {
        return Err(EntropyError::Negative("demand"));
    }
    Ok(ModeCosts {
        control: k * xlog2x(nodes / cmp.control_niches),
        random: k * xlog2x(cmp.random_niches) * cmp.demand,
    })
}

/// Demand quantity at which both mode costs are equal. Below it the
/// control-dominated mode is the more expensive one; above it, the random one.
pub fn demand_dividing_point(nodes: f64, control_niches: f64, random_niches: f64) -> Result<f64> {
    if !(random_niches >= 2.0) {
        return Err(EntropyError::DegenerateRandomNiches(random_niches));
    }
    check_niches(control_niches, nodes)?;
    Ok(nodes * (nodes.ln() - control_niches.ln())
        / (control_niches * random_niches * random_niches.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn dist(c: &[u64]) -> NicheDistribution {
        NicheDistribution::new(c.to_vec())
    }

    #[test]
    fn entropy_of_table_cases() {
        assert_eq!(shannon_entropy(&dist(&[16])).unwrap(), 0.0);
        assert!((shannon_entropy(&dist(&[4, 4, 4, 4])).unwrap() - 2.0).abs() < TOL);
        assert!((shannon_entropy(&dist(&[1; 16])).unwrap() - 4.0).abs() < TOL);
        let h = shannon_entropy(&dist(&[3, 1])).unwrap();
        assert!((h - 0.811278).abs() < 1e-6, "{h}");
    }

    #[test]
    fn zero_classes_are_dropped() {
        let a = shannon_entropy(&dist(&[0, 3, 0, 1])).unwrap();
        let b = shannon_entropy(&dist(&[3, 1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            shannon_entropy(&dist(&[0, 0])),
            Err(EntropyError::EmptyDistribution)
        );
        assert_eq!(
            shannon_entropy(&dist(&[])),
            Err(EntropyError::EmptyDistribution)
        );
    }

    #[test]
    fn max_entropy_values() {
        assert_eq!(max_entropy(16).unwrap(), 4.0);
        assert_eq!(max_entropy(1).unwrap(), 0.0);
        assert_eq!(max_entropy(2).unwrap(), 1.0);
        assert_eq!(max_entropy(0), Err(EntropyError::NoClasses));
    }

    #[test]
    fn efficiency() {
        let rec = |g, c| EfficiencyRecord { gained: g, consumed: c, window: 20 };
        assert_eq!(value_efficiency(&rec(30.0, 10.0)).unwrap(), 3.0);
        assert_eq!(value_efficiency(&rec(0.0, 5.0)).unwrap(), 0.0);
        assert_eq!(value_efficiency(&rec(7.0, 2.0)).unwrap(), 3.5);
        assert_eq!(
            value_efficiency(&rec(7.0, 0.0)),
            Err(EntropyError::UndefinedEfficiency)
        );
    }

    #[test]
    fn operating_cost_table_cases() {
        let c = |m| operating_cost(&CostModel { k: 1.0, nodes: 16.0, niches: m }).unwrap();
        let a = c(1.0);
        assert_eq!((a.management, a.matching, a.total), (64.0, 0.0, 64.0));
        let b = c(16.0);
        assert_eq!((b.management, b.matching, b.total), (0.0, 64.0, 64.0));
        let m = c(4.0);
        assert_eq!((m.management, m.matching, m.total), (8.0, 8.0, 16.0));
    }

    #[test]
    fn operating_cost_rejects_bad_niches() {
        for m in [0.0, 0.5, 17.0] {
            assert!(matches!(
                operating_cost(&CostModel { k: 1.0, nodes: 16.0, niches: m }),
                Err(EntropyError::NicheCountOutOfRange { .. })
            ));
        }
        assert!(CostModel::new(0.0, 16.0, 4.0).is_err());
    }

    #[test]
    fn benefit() {
        assert_eq!(value_benefit(100.0, 64.0), 36.0);
        assert_eq!(value_benefit(100.0, 16.0), 84.0);
        assert_eq!(value_benefit(0.0, 0.0), 0.0);
    }

    #[test]
    fn optimal_partition_examples() {
        let p = optimal_partition(1.0, 16.0).unwrap();
        assert_eq!((p.niches, p.min_cost, p.entropy), (4.0, 16.0, 2.0));
        let p = optimal_partition(1.0, 1.0).unwrap();
        assert_eq!((p.niches, p.min_cost, p.entropy), (1.0, 0.0, 0.0));
        // brute force over integer m in [1, 64], computed independently
        let brute = (1..=64)
            .map(|m| {
                let m = m as f64;
                2.0 * ((64.0 / m) * (64.0f64 / m).log2() + m * m.log2())
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(brute, 96.0);
        let p = optimal_partition(2.0, 64.0).unwrap();
        assert_eq!((p.niches, p.min_cost, p.entropy), (8.0, brute, 3.0));
    }

    #[test]
    fn integer_optimum_picks_a_rounding() {
        assert_eq!(integer_optimum(1.0, 16).unwrap(), (4, 16.0));
        let (m, _) = integer_optimum(1.0, 10).unwrap();
        assert!(m == 3 || m == 4);
        assert_eq!(integer_optimum(1.0, 1).unwrap(), (1, 0.0));
    }

    #[test]
    fn mode_cost_examples() {
        let cmp = ModeComparison { control_niches: 2.0, random_niches: 4.0, demand: 3.0 };
        let c = mode_costs(1.0, 16.0, &cmp).unwrap();
        assert_eq!(c.control, 24.0);
        assert_eq!(c.random, 24.0);
        let c = mode_costs(1.0, 16.0, &ModeComparison { demand: 0.0, ..cmp }).unwrap();
        assert_eq!(c.random, 0.0);
        assert!(mode_costs(1.0, 16.0, &ModeComparison { control_niches: 17.0, ..cmp }).is_err());
    }

    #[test]
    fn dividing_point_examples() {
        assert!((demand_dividing_point(16.0, 2.0, 4.0).unwrap() - 3.0).abs() < TOL);
        assert_eq!(demand_dividing_point(16.0, 16.0, 3.0).unwrap(), 0.0);
        assert!((demand_dividing_point(64.0, 4.0, 8.0).unwrap() - 8.0 / 3.0).abs() < TOL);
        assert_eq!(
            demand_dividing_point(16.0, 2.0, 1.0),
            Err(EntropyError::DegenerateRandomNiches(1.0))
        );
    }

    #[test]
    fn costs_cross_at_dividing_point() {
        let d = demand_dividing_point(16.0, 2.0, 4.0).unwrap();
        let cmp = ModeComparison { control_niches: 2.0, random_niches: 4.0, demand: d };
        let c = mode_costs(1.0, 16.0, &cmp).unwrap();
        assert!((c.control - c.random).abs() < TOL);
    }
}
