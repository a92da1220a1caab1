//! Closed-form security metrics.
//!
//! * corruption factor of a layer, a sub-layer and a set of layers,
//! * attack success probability (identical to the corruption factor),
//! * hypergeometric probability of drawing corrupted validators.
//!
//! Binomial arithmetic is exact (big rationals) for pools of at most
//! [`EXACT_POOL_LIMIT`] nodes. Larger pools use log-space products of
//! ratios, which keep the relative error well below `1e-9` for pools in the
//! hundreds of thousands.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::topology::{DnnTopology, Layer, TopologyError};

/// Largest pool evaluated with exact rational arithmetic.
pub const EXACT_POOL_LIMIT: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("layer {0} is sequential and has no sub-layers")]
    UnexpectedSubLayer(usize),
    #[error("layer {0} is branched; a sub-layer index is required")]
    MissingSubLayer(usize),
    #[error("sub-layer {sub_layer} is out of range for a branch of {sub_layers}")]
    SubLayerOutOfRange { sub_layer: usize, sub_layers: usize },
    #[error("a branch needs at least 2 sub-layers, got {0}")]
    DegenerateBranch(usize),
    #[error("corruption factor {0} is outside [0, 1]")]
    FactorOutOfRange(f64),
    #[error("invalid selection query: {0}")]
    InvalidQuery(&'static str),
}

/// Probability that a pass through the network touches a corrupted
/// component. Always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CorruptionFactor(f64);

impl CorruptionFactor {
    pub fn new(value: f64) -> Result<Self, MetricsError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(MetricsError::FactorOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Factor of one sub-layer of a branch with `sub_layers` sub-layers: the
/// layer's visits grow with the number of sub-layers, so each one carries
/// `1 / sub_layers`.
pub fn sub_layer_factor(sub_layers: usize) -> Result<CorruptionFactor, MetricsError> {
    if sub_layers < 2 {
        return Err(MetricsError::DegenerateBranch(sub_layers));
    }
    Ok(CorruptionFactor(1.0 / sub_layers as f64))
}

/// Corruption factor of a layer (`sub_layer = None`) or of one sub-layer of a
/// branched layer. Every pass visits a sequential layer, so its factor is 1.
pub fn corruption_factor_layer(
    topology: &DnnTopology,
    layer: usize,
    sub_layer: Option<usize>,
) -> Result<CorruptionFactor, MetricsError> {
    match (topology.layer(layer)?, sub_layer) {
        (Layer::Sequential, None) => Ok(CorruptionFactor(1.0)),
        (Layer::Sequential, Some(_)) => Err(MetricsError::UnexpectedSubLayer(layer)),
        (Layer::Branched { .. }, None) => Err(MetricsError::MissingSubLayer(layer)),
        (Layer::Branched { sub_layers }, Some(k)) => {
            if k >= sub_layers {
                return Err(MetricsError::SubLayerOutOfRange { sub_layer: k, sub_layers });
            }
            sub_layer_factor(sub_layers)
        }
    }
}

/// Factor of a set of layers, `1 - prod(1 - eta_i)`, treating the
/// corruption events of the members as independent. A set containing any
/// factor of 1 yields 1.
pub fn corruption_factor_set(factors: &[CorruptionFactor]) -> CorruptionFactor {
    let untouched: f64 = factors.iter().map(|f| 1.0 - f.0).product();
    CorruptionFactor((1.0 - untouched).clamp(0.0, 1.0))
}

/// The attack success probability equals the corruption factor.
pub fn attack_success_probability(factor: CorruptionFactor) -> f64 {
    factor.0
}

/// Draw `chosen` of `pool_size` validators, `corrupted` of which are
/// corrupted; `hits` is the number of corrupted validators drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionQuery {
    pub pool_size: u64,
    pub corrupted: u64,
    pub chosen: u64,
    pub hits: Option<u64>,
}

impl SelectionQuery {
    pub fn new(pool_size: u64, corrupted: u64, chosen: u64, hits: u64) -> Self {
        Self { pool_size, corrupted, chosen, hits: Some(hits) }
    }

    fn validate(&self) -> Result<(), MetricsError> {
        validate_draw(self.pool_size, self.corrupted, self.chosen)?;
        if let Some(x) = self.hits {
            if x > self.corrupted.min(self.chosen) {
                return Err(MetricsError::InvalidQuery("hits exceed min(corrupted, chosen)"));
            }
        }
        Ok(())
    }
}

fn validate_draw(n: u64, c: u64, m: u64) -> Result<(), MetricsError> {
    if c > n {
        return Err(MetricsError::InvalidQuery("corrupted count exceeds pool size"));
    }
    if m > n {
        return Err(MetricsError::InvalidQuery("chosen count exceeds pool size"));
    }
    Ok(())
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) here
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `ln C(n, k)` as a sum of logarithms of ratios.
fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn big_ratio(numer: BigUint, denom: BigUint) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `C(c, x) C(n-c, m-x) / C(n, m)` as an exact rational.
pub fn selection_pmf_exact(query: &SelectionQuery) -> Result<BigRational, MetricsError> {
    query.validate()?;
    let x = query.hits.ok_or(MetricsError::InvalidQuery("hit count is required"))?;
    let SelectionQuery { pool_size: n, corrupted: c, chosen: m, .. } = *query;
    if m - x > n - c {
        return Ok(BigRational::zero());
    }
    Ok(big_ratio(binomial(c, x) * binomial(n - c, m - x), binomial(n, m)))
}

/// Probability of drawing exactly `hits` corrupted validators.
pub fn selection_pmf(query: &SelectionQuery) -> Result<f64, MetricsError> {
    if query.pool_size <= EXACT_POOL_LIMIT {
        return Ok(to_f64(&selection_pmf_exact(query)?));
    }
    query.validate()?;
    let x = query.hits.ok_or(MetricsError::InvalidQuery("hit count is required"))?;
    let SelectionQuery { pool_size: n, corrupted: c, chosen: m, .. } = *query;
    if m - x > n - c {
        return Ok(0.0);
    }
    let ln_p = ln_binomial(c, x) + ln_binomial(n - c, m - x) - ln_binomial(n, m);
    Ok(ln_p.exp().min(1.0))
}

/// Exact `C(n-c, m) / C(n, m)`: no corrupted validator is drawn.
fn miss_probability_exact(n: u64, c: u64, m: u64) -> BigRational {
    // prod_{i<m} (n-c-i)/(n-i) == prod_{j<c} (n-m-j)/(n-j); use the shorter.
    let (k, d) = if c <= m { (c, m) } else { (m, c) };
    let mut numer = BigUint::one();
    let mut denom = BigUint::one();
    for j in 0..k {
        numer *= n - d - j;
        denom *= n - j;
    }
    big_ratio(numer, denom)
}

/// Probability that at least one corrupted validator is among `m` chosen
/// from a pool of `n` holding `c` corrupted ones.
pub fn selection_at_least_one(n: u64, c: u64, m: u64) -> Result<f64, MetricsError> {
    validate_draw(n, c, m)?;
    if m > n - c {
        return Ok(1.0);
    }
    if c == 0 || m == 0 {
        return Ok(0.0);
    }
    if n <= EXACT_POOL_LIMIT {
        let hit = BigRational::one() - miss_probability_exact(n, c, m);
        return Ok(to_f64(&hit));
    }
    let (k, d) = if c <= m { (c, m) } else { (m, c) };
    let ln_miss: f64 = (0..k).map(|j| (-(d as f64) / (n - j) as f64).ln_1p()).sum();
    Ok(-ln_miss.exp_m1())
}

/// Exact form of [`selection_at_least_one`].
pub fn selection_at_least_one_exact(n: u64, c: u64, m: u64) -> Result<BigRational, MetricsError> {
    validate_draw(n, c, m)?;
    if m > n - c {
        return Ok(BigRational::one());
    }
    Ok(BigRational::one() - miss_probability_exact(n, c, m))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cf(v: f64) -> CorruptionFactor {
        CorruptionFactor::new(v).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
        }
    }

    #[test]
    fn layer_factors() {
        let t = DnnTopology::new(vec![Layer::Sequential, Layer::Branched { sub_layers: 2 }]).unwrap();
        assert_eq!(corruption_factor_layer(&t, 0, None).unwrap().value(), 1.0);
        assert_eq!(corruption_factor_layer(&t, 1, Some(1)).unwrap().value(), 0.5);
        assert_eq!(corruption_factor_layer(&t, 0, Some(0)), Err(MetricsError::UnexpectedSubLayer(0)));
        assert_eq!(corruption_factor_layer(&t, 1, None), Err(MetricsError::MissingSubLayer(1)));
        assert!(matches!(
            corruption_factor_layer(&t, 1, Some(2)),
            Err(MetricsError::SubLayerOutOfRange { .. })
        ));
        assert!(matches!(corruption_factor_layer(&t, 5, None), Err(MetricsError::Topology(_))));
        assert_eq!(sub_layer_factor(1), Err(MetricsError::DegenerateBranch(1)));
    }

    #[test]
    fn factor_range_is_checked() {
        assert!(CorruptionFactor::new(1.5).is_err());
        assert!(CorruptionFactor::new(-0.1).is_err());
        assert!(CorruptionFactor::new(f64::NAN).is_err());
    }

    #[test]
    fn set_factor_examples() {
        assert_eq!(corruption_factor_set(&[]).value(), 0.0);
        assert_eq!(corruption_factor_set(&[cf(1.0)]).value(), 1.0);
        assert_eq!(corruption_factor_set(&[cf(0.5), cf(0.5)]).value(), 0.75);
        assert_eq!(corruption_factor_set(&[cf(1.0), cf(0.2)]).value(), 1.0);
    }

    #[test]
    fn two_branch_enumeration_matches_set_factor() {
        // Two independent branches of two sub-layers; one sub-layer of each
        // is corrupted. A pass picks one route per branch, 4 equiprobable
        // combinations; a route is touched if it uses a corrupted sub-layer.
        let mut touched = 0;
        for a in 0..2 {
            for b in 0..2 {
                if a == 0 || b == 0 {
                    touched += 1;
                }
            }
        }
        let enumerated = touched as f64 / 4.0;
        assert_eq!(corruption_factor_set(&[sub_layer_factor(2).unwrap(); 2]).value(), enumerated);
    }

    #[test]
    fn success_probability_is_identity() {
        for v in [0.0, 0.75, 1.0] {
            assert_eq!(attack_success_probability(cf(v)), v);
        }
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(selection_pmf(&SelectionQuery::new(5, 2, 2, 1)).unwrap(), 0.6);
        assert_eq!(selection_pmf(&SelectionQuery::new(10, 0, 3, 0)).unwrap(), 1.0);
        assert_eq!(selection_pmf(&SelectionQuery::new(100, 1, 1, 1)).unwrap(), 0.01);
    }

    #[test]
    fn pmf_rejects_invalid_queries() {
        assert!(selection_pmf(&SelectionQuery::new(5, 6, 2, 1)).is_err());
        assert!(selection_pmf(&SelectionQuery::new(5, 2, 6, 1)).is_err());
        assert!(selection_pmf(&SelectionQuery::new(5, 2, 2, 3)).is_err());
        let no_hits = SelectionQuery { pool_size: 5, corrupted: 2, chosen: 2, hits: None };
        assert!(selection_pmf(&no_hits).is_err());
    }

    #[test]
    fn at_least_one_examples() {
        let p = selection_at_least_one(100, 5, 2).unwrap();
        assert!(rel_err(p, 0.09797979797979794) <= 1e-12, "{p}");
        assert_eq!(selection_at_least_one(100, 50, 1).unwrap(), 0.5);
        let p = selection_at_least_one(100_000, 1, 50).unwrap();
        assert!(rel_err(p, 0.0005) <= 1e-12, "{p}");
        assert_eq!(selection_at_least_one(10, 3, 8).unwrap(), 1.0);
        assert_eq!(selection_at_least_one(10, 0, 5).unwrap(), 0.0);
        assert!(selection_at_least_one(10, 11, 1).is_err());
    }

    #[test]
    fn float_route_agrees_with_exact_route() {
        // Pools just above the exact limit, compared against the big
        // rational result.
        for &(n, c, m) in &[(10_001u64, 1u64, 50u64), (20_000, 50, 1000), (12_345, 700, 300), (50_000, 10, 5)] {
            let exact = to_f64(&selection_at_least_one_exact(n, c, m).unwrap());
            let float = selection_at_least_one(n, c, m).unwrap();
            assert!(rel_err(float, exact) <= 1e-11, "n={n} c={c} m={m}");
            for x in [0, 1, c.min(m) / 2] {
                let q = SelectionQuery::new(n, c, m, x);
                let exact = to_f64(&selection_pmf_exact(&q).unwrap());
                let float = selection_pmf(&q).unwrap();
                if exact > 1e-250 {
                    assert!(rel_err(float, exact) <= 1e-9, "pmf n={n} c={c} m={m} x={x}");
                }
            }
        }
    }

    #[test]
    fn pmf_normalizes_exhaustively_up_to_60() {
        for n in 0..=60u64 {
            for c in 0..=n {
                for m in 0..=n {
                    let total: f64 = (0..=c.min(m))
                        .map(|x| selection_pmf(&SelectionQuery::new(n, c, m, x)).unwrap())
                        .sum();
                    assert!((total - 1.0).abs() <= 1e-9, "n={n} c={c} m={m}");
                }
            }
        }
    }

    #[test]
    fn pmf_normalizes_on_large_pools() {
        for &(n, c, m) in &[(100_000u64, 50u64, 1000u64), (100_000, 5, 150), (30_000, 20, 40)] {
            let total: f64 = (0..=c.min(m))
                .map(|x| selection_pmf(&SelectionQuery::new(n, c, m, x)).unwrap())
                .sum();
            assert!((total - 1.0).abs() <= 1e-9, "n={n} c={c} m={m} total={total}");
        }
    }

    #[test]
    fn at_least_one_is_monotone_on_grid() {
        for n in [20u64, 100, 20_000] {
            let step = (n / 20).max(1);
            for c in (0..=n).step_by(step as usize) {
                let mut prev = 0.0;
                for m in (0..=n).step_by(step as usize) {
                    let p = selection_at_least_one(n, c, m).unwrap();
                    assert!(p + 1e-15 >= prev, "m not monotone n={n} c={c} m={m}");
                    prev = p;
                }
            }
            for m in (0..=n).step_by(step as usize) {
                let mut prev = 0.0;
                for c in (0..=n).step_by(step as usize) {
                    let p = selection_at_least_one(n, c, m).unwrap();
                    assert!(p + 1e-15 >= prev, "c not monotone n={n} c={c} m={m}");
                    prev = p;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn at_least_one_is_complement_of_zero_hits(n in 0u64..400, c_frac in 0.0f64..=1.0, m_frac in 0.0f64..=1.0) {
            let c = (c_frac * n as f64) as u64;
            let m = (m_frac * n as f64) as u64;
            let p = selection_at_least_one(n, c, m).unwrap();
            let zero = selection_pmf(&SelectionQuery::new(n, c, m, 0)).unwrap();
            prop_assert!((p - (1.0 - zero)).abs() <= 1e-12);
        }

        #[test]
        fn set_factor_is_order_independent_and_monotone(
            values in proptest::collection::vec(0.0f64..=1.0, 0..12),
            extra in 0.0f64..=1.0,
        ) {
            let factors: Vec<_> = values.iter().map(|&v| cf(v)).collect();
            let mut reversed = factors.clone();
            reversed.reverse();
            let forward = corruption_factor_set(&factors).value();
            prop_assert!((forward - corruption_factor_set(&reversed).value()).abs() <= 1e-12);
            let mut grown = factors.clone();
            grown.push(cf(extra));
            prop_assert!(corruption_factor_set(&grown).value() + 1e-12 >= forward);
        }
    }
}
