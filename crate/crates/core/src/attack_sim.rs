//! Monte Carlo estimation of the attack success probability.
//!
//! A trial binds nodes to the slots of a [`DeploymentPlan`] with the chosen
//! [`AssignmentModel`] and asks whether an oblivious attacker controlling the
//! corrupted nodes changes the network output. The attack succeeds iff it
//! holds the node of some unsecured unit, or at least `n_min` slots of some
//! quorum. A quorum holding between 1 and `n_min - 1` corrupted slots
//! disagrees internally and raises an anomaly.
//!
//! Trial `i` of a run with master seed `m` is driven solely by
//! [`seed::derive`]`(m, i)`, so estimates are bit-identical for any number of
//! worker threads.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::seed;
use crate::topology::{
    assign, AssignmentModel, DeploymentPlan, DnnTopology, NodePool, QuorumConfig, SlotAssignment,
    TopologyError,
};

/// Iterations per estimate unless configured otherwise.
pub const DEFAULT_ITERATIONS: u64 = 100_000;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Largest plan accepted by [`exact_small_gamma`].
pub const EXACT_SLOT_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("{corrupted} corrupted nodes do not fit in a pool of {nodes}")]
    TooManyCorrupted { corrupted: usize, nodes: usize },
    #[error("the partition model needs a pool of exactly {slots} nodes, got {nodes}")]
    PartitionPoolSize { nodes: usize, slots: usize },
    #[error("exact enumeration supports at most {EXACT_SLOT_LIMIT} slots, plan has {0}")]
    TooLargeForExact(usize),
    #[error("invalid sweep value {value} for {parameter}: {reason}")]
    InvalidSweepValue { parameter: SweepParameter, value: u64, reason: String },
}

/// A fully specified Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub plan: DeploymentPlan,
    pub corrupted_count: usize,
    pub model: AssignmentModel,
    pub iterations: u64,
    pub master_seed: u64,
    /// Pool size for the with-replacement model; defaults to the slot count.
    /// The partition model always uses the slot count.
    pub pool_size: Option<usize>,
}

impl AttackScenario {
    pub fn new(plan: DeploymentPlan, corrupted_count: usize, model: AssignmentModel) -> Self {
        Self {
            plan,
            corrupted_count,
            model,
            iterations: DEFAULT_ITERATIONS,
            master_seed: 0,
            pool_size: None,
        }
    }

    pub fn iterations(mut self, iterations: u64) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size.unwrap_or(self.plan.total_slots())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.iterations == 0 {
            return Err(SimError::NoIterations);
        }
        let nodes = self.pool_size();
        if self.model == AssignmentModel::Partition && nodes != self.plan.total_slots() {
            return Err(SimError::PartitionPoolSize { nodes, slots: self.plan.total_slots() });
        }
        if nodes == 0 {
            return Err(TopologyError::EmptyPool.into());
        }
        if self.corrupted_count > nodes {
            return Err(SimError::TooManyCorrupted { corrupted: self.corrupted_count, nodes });
        }
        Ok(())
    }

    pub fn pool(&self) -> Result<NodePool, SimError> {
        self.validate()?;
        Ok(NodePool::with_first_corrupted(self.pool_size(), self.corrupted_count)?)
    }
}

/// Result of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub success: bool,
    /// Some quorum held between 1 and `n_min - 1` corrupted slots.
    pub detected_anomaly: bool,
    /// Quorums with at least `n_min` corrupted slots.
    pub breached_quorums: usize,
    /// Breached quorums in which every slot was corrupted.
    pub unanimous_breaches: usize,
    /// Unsecured units whose single slot holds a corrupted node.
    pub corrupted_unsecured_layers: usize,
}

/// Apply the success predicate to a plan given which slots are corrupted.
pub fn evaluate_corrupted_slots<F>(plan: &DeploymentPlan, is_corrupted_slot: F) -> TrialOutcome
where
    F: Fn(usize) -> bool,
{
    let n_min = plan.quorum().n_min();
    let mut outcome = TrialOutcome::default();
    for unit in plan.units() {
        let hits = (unit.start..unit.start + unit.replicas).filter(|&i| is_corrupted_slot(i)).count();
        if !unit.secured {
            if hits > 0 {
                outcome.corrupted_unsecured_layers += 1;
            }
        } else if hits >= n_min {
            outcome.breached_quorums += 1;
            if hits == unit.replicas {
                outcome.unanimous_breaches += 1;
            }
        } else if hits > 0 {
            outcome.detected_anomaly = true;
        }
    }
    outcome.success = outcome.breached_quorums > 0 || outcome.corrupted_unsecured_layers > 0;
    outcome
}

/// Apply the success predicate to a concrete assignment.
pub fn evaluate_assignment(
    plan: &DeploymentPlan,
    pool: &NodePool,
    assignment: &SlotAssignment,
) -> TrialOutcome {
    let mask = pool.corruption_mask();
    evaluate_with_mask(plan, &mask, assignment)
}

fn evaluate_with_mask(plan: &DeploymentPlan, mask: &[bool], assignment: &SlotAssignment) -> TrialOutcome {
    let nodes = assignment.nodes();
    evaluate_corrupted_slots(plan, |i| mask[nodes[i].0 as usize])
}

pub fn run_trial(
    plan: &DeploymentPlan,
    pool: &NodePool,
    model: AssignmentModel,
    trial_seed: u64,
) -> Result<TrialOutcome, SimError> {
    let mut rng = seed::rng_from_seed(trial_seed);
    let assignment = assign(model, plan, pool, &mut rng)?;
    Ok(evaluate_assignment(plan, pool, &assignment))
}

/// Monte Carlo estimate of the attack success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessEstimate {
    pub gamma_hat: f64,
    pub iterations: u64,
    pub successes: u64,
    /// Trials that raised at least one anomaly.
    pub detections: u64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl SuccessEstimate {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let spread = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Exact endpoints at 0 and 1, and never excluding the point estimate.
    let low = if successes == 0 { 0.0 } else { (centre - spread).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { (centre + spread).clamp(p, 1.0) };
    (low, high)
}

pub fn estimate_success(scenario: &AttackScenario) -> Result<SuccessEstimate, SimError> {
    let pool = scenario.pool()?;
    let mask = pool.corruption_mask();
    let plan = &scenario.plan;
    let model = scenario.model;
    let master = scenario.master_seed;

    let (successes, detections) = (0..scenario.iterations)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng_from_seed(seed::derive(master, i));
            let assignment = assign(model, plan, &pool, &mut rng)
                .expect("scenario validated before sampling");
            let outcome = evaluate_with_mask(plan, &mask, &assignment);
            (outcome.success as u64, outcome.detected_anomaly as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let (ci_low, ci_high) = wilson_interval(successes, scenario.iterations);
    Ok(SuccessEstimate {
        gamma_hat: successes as f64 / scenario.iterations as f64,
        iterations: scenario.iterations,
        successes,
        detections,
        ci_low,
        ci_high,
        master_seed: master,
    })
}

/// Exact success probability under the partition model, by enumerating
/// every set of `corrupted` slots. Each set is equally likely under a uniform
/// bijection, whichever nodes are the corrupted ones.
pub fn exact_small_gamma(plan: &DeploymentPlan, corrupted: usize) -> Result<Ratio<u64>, SimError> {
    let n = plan.total_slots();
    if n > EXACT_SLOT_LIMIT {
        return Err(SimError::TooLargeForExact(n));
    }
    if corrupted > n {
        return Err(SimError::TooManyCorrupted { corrupted, nodes: n });
    }
    let mut placements = 0u64;
    let mut successes = 0u64;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != corrupted {
            continue;
        }
        placements += 1;
        if evaluate_corrupted_slots(plan, |i| mask & (1 << i) != 0).success {
            successes += 1;
        }
    }
    Ok(Ratio::new(successes, placements))
}

/// How the vote requirement of a quorum is stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteRule {
    Threshold(Ratio<u64>),
    MinVotes(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SecuredLayers {
    /// The first `q` layers.
    Count(usize),
    All,
    Explicit(BTreeSet<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    Count(usize),
    /// `floor(fraction * pool size)` corrupted nodes.
    FractionOfPool(Ratio<u64>),
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    /// Quorum count `q`.
    QuorumCount,
    /// Quorum size `s`.
    QuorumSize,
    /// Layer count `l` of a sequential network.
    LayerCount,
    /// Corrupted node count `c`.
    Corrupted,
    /// Explicit `n_min`.
    MinVotes,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::QuorumCount => "q",
            SweepParameter::QuorumSize => "s",
            SweepParameter::LayerCount => "l",
            SweepParameter::Corrupted => "c",
            SweepParameter::MinVotes => "n_min",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "q" => SweepParameter::QuorumCount,
            "s" => SweepParameter::QuorumSize,
            "l" => SweepParameter::LayerCount,
            "c" => SweepParameter::Corrupted,
            "n_min" => SweepParameter::MinVotes,
            _ => return None,
        })
    }
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A scenario described by rules rather than resolved values, so that one
/// parameter can be swept while the others keep their meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub topology: DnnTopology,
    pub quorum_size: usize,
    pub votes: VoteRule,
    pub secured: SecuredLayers,
    pub corruption: Corruption,
    pub model: AssignmentModel,
    pub iterations: u64,
    pub master_seed: u64,
    pub pool_size: Option<usize>,
}

impl ScenarioTemplate {
    /// Resolve into a concrete scenario seeded with `master_seed`.
    pub fn resolve(&self) -> Result<AttackScenario, SimError> {
        let quorum = match self.votes {
            VoteRule::Threshold(t) => QuorumConfig::new(self.quorum_size, t)?,
            VoteRule::MinVotes(v) => QuorumConfig::with_min_votes(self.quorum_size, v)?,
        };
        let layers = self.topology.layer_count();
        let secured: BTreeSet<usize> = match &self.secured {
            SecuredLayers::Count(q) => {
                if *q > layers {
                    return Err(TopologyError::LayerOutOfRange { index: q - 1, layers }.into());
                }
                (0..*q).collect()
            }
            SecuredLayers::All => (0..layers).collect(),
            SecuredLayers::Explicit(set) => set.clone(),
        };
        let plan = DeploymentPlan::build(self.topology.clone(), secured, quorum)?;
        let pool_size = match self.model {
            AssignmentModel::Partition => None,
            AssignmentModel::WithReplacement => self.pool_size,
        };
        let nodes = pool_size.unwrap_or(plan.total_slots());
        let corrupted_count = match self.corruption {
            Corruption::Count(c) => c,
            Corruption::FractionOfPool(f) => {
                (Ratio::from_integer(nodes as u64) * f).to_integer() as usize
            }
        };
        let scenario = AttackScenario {
            plan,
            corrupted_count,
            model: self.model,
            iterations: self.iterations,
            master_seed: self.master_seed,
            pool_size,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Copy of this template with one parameter replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: u64) -> Result<Self, SimError> {
        let invalid = |reason: &str| SimError::InvalidSweepValue {
            parameter,
            value,
            reason: reason.to_string(),
        };
        let v = value as usize;
        let mut next = self.clone();
        match parameter {
            SweepParameter::QuorumCount => next.secured = SecuredLayers::Count(v),
            SweepParameter::QuorumSize => {
                if v == 0 {
                    return Err(invalid("quorum size must be at least 1"));
                }
                next.quorum_size = v;
            }
            SweepParameter::LayerCount => {
                if !self.topology.is_sequential() {
                    return Err(invalid("layer count can only be swept on sequential networks"));
                }
                if let SecuredLayers::Explicit(_) = self.secured {
                    return Err(invalid("layer count cannot be swept with an explicit layer list"));
                }
                next.topology = DnnTopology::sequential(v).map_err(|e| invalid(&e.to_string()))?;
            }
            SweepParameter::Corrupted => next.corruption = Corruption::Count(v),
            SweepParameter::MinVotes => next.votes = VoteRule::MinVotes(v),
        }
        Ok(next)
    }

    /// Resolve the scenario for one sweep value, mapping resolution errors
    /// onto the swept value.
    pub fn resolve_point(&self, parameter: SweepParameter, value: u64) -> Result<AttackScenario, SimError> {
        self.with_parameter(parameter, value)?
            .resolve()
            .map_err(|e| match e {
                e @ SimError::InvalidSweepValue { .. } => e,
                other => SimError::InvalidSweepValue { parameter, value, reason: other.to_string() },
            })
    }
}

/// Seed of sweep point `index` under `master_seed`.
pub fn sweep_point_seed(master_seed: u64, index: usize) -> u64 {
    seed::derive(master_seed, index as u64)
}

/// One estimate per swept value. Point `i` runs with seed
/// [`sweep_point_seed`]`(master, i)`, which is recorded in its estimate so
/// any row can be rerun on its own.
pub fn sweep(
    base: &ScenarioTemplate,
    parameter: SweepParameter,
    values: &[u64],
) -> Result<Vec<(u64, SuccessEstimate)>, SimError> {
    let scenarios = values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut scenario = base.resolve_point(parameter, value)?;
            scenario.master_seed = sweep_point_seed(base.master_seed, i);
            Ok((value, scenario))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    scenarios
        .iter()
        .map(|(value, scenario)| Ok((*value, estimate_success(scenario)?)))
        .collect()
}
