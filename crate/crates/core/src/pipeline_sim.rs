//! Quorum-voted execution of a layered inference pipeline.
//!
//! The gateway feeds an input payload to layer 0. Every unit (a layer, or
//! one sub-layer of a branch) is run by the nodes assigned to its slots.
//! Secured units vote with [`quorum_vote`]; unsecured units forward their
//! single node's output. All members of a unit receive the value decided by
//! the previous layer. Branches run every sub-layer on the same input and
//! concatenate the outputs in sub-layer order.
//!
//! Layer arithmetic is modulo the prime [`MODULUS`]. Values at or above the
//! modulus never arise from honest computation, so forged payloads are
//! recognisable: a layer applied to a forged payload yields a forged result.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::seed;
use crate::topology::{DeploymentPlan, DnnTopology, Layer, NodeId, SlotAssignment};

/// `2^31 - 1`.
pub const MODULUS: u64 = (1 << 31) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error("quorum vote over an empty result list")]
    EmptyVote,
    #[error("n_min = {n_min} must lie in 1..={results}")]
    VoteThreshold { n_min: usize, results: usize },
    #[error("input payload has {got} values, the network expects {expected}")]
    InputDimension { expected: usize, got: usize },
    #[error("assignment covers {got} slots, the plan has {expected}")]
    AssignmentSize { expected: usize, got: usize },
    #[error("no behaviour given for node {0}")]
    MissingBehavior(NodeId),
    #[error("plan topology does not match the network")]
    TopologyMismatch,
    #[error("empirical factor needs at least one pass")]
    NoPasses,
    #[error("factor target {0:?} is not part of the topology")]
    InvalidTarget(FactorTarget),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Payload(pub Vec<u64>);

impl Payload {
    pub fn is_forged(&self) -> bool {
        self.0.iter().any(|&v| v >= MODULUS)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Affine map `x -> A x + b (mod MODULUS)` with `A` unit upper triangular,
/// hence a bijection on honest payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerFunction {
    dim: usize,
    /// Row-major strict upper triangle, `dim * (dim - 1) / 2` entries.
    upper: Vec<u64>,
    bias: Vec<u64>,
}

impl LayerFunction {
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = seed::rng_from_seed(seed);
        let upper = (0..dim * dim.saturating_sub(1) / 2).map(|_| rng.random_range(0..MODULUS)).collect();
        let bias = (0..dim).map(|_| rng.random_range(0..MODULUS)).collect();
        Self { dim, upper, bias }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, input: &Payload) -> Payload {
        assert_eq!(input.len(), self.dim, "layer input dimension");
        let forged = input.is_forged();
        let x: Vec<u64> = input.0.iter().map(|v| v % MODULUS).collect();
        let mut out = Vec::with_capacity(self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            let mut acc = (x[i] + self.bias[i]) % MODULUS;
            for xj in &x[i + 1..] {
                acc = (acc + self.upper[k] * xj) % MODULUS;
                k += 1;
            }
            out.push(acc);
        }
        if forged {
            out[0] += MODULUS;
        }
        Payload(out)
    }
}

/// One [`LayerFunction`] per unit, in plan unit order.
#[derive(Debug, Clone)]
pub struct Network {
    topology: DnnTopology,
    input_dim: usize,
    /// `functions[layer][sub_layer]`.
    functions: Vec<Vec<LayerFunction>>,
}

impl Network {
    pub fn random(topology: DnnTopology, input_dim: usize, seed: u64) -> Self {
        assert!(input_dim > 0, "payloads need at least one value");
        let mut dim = input_dim;
        let mut functions = Vec::with_capacity(topology.layer_count());
        let mut unit = 0u64;
        for layer in topology.layers() {
            let fs: Vec<LayerFunction> = (0..layer.units())
                .map(|_| {
                    unit += 1;
                    LayerFunction::random(dim, seed::derive(seed, unit))
                })
                .collect();
            dim *= fs.len();
            functions.push(fs);
        }
        Self { topology, input_dim, functions }
    }

    pub fn topology(&self) -> &DnnTopology {
        &self.topology
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn function(&self, layer: usize, sub_layer: usize) -> &LayerFunction {
        &self.functions[layer][sub_layer]
    }

    /// Output of every layer when every node is honest.
    pub fn clean_trace(&self, input: &Payload) -> Vec<Payload> {
        let mut current = input.clone();
        let mut trace = Vec::with_capacity(self.functions.len());
        for fs in &self.functions {
            current = concat(fs.iter().map(|f| f.apply(&current)));
            trace.push(current.clone());
        }
        trace
    }

    pub fn clean_reference(&self, input: &Payload) -> Payload {
        self.clean_trace(input).pop().expect("topology has at least one layer")
    }
}

fn concat(parts: impl Iterator<Item = Payload>) -> Payload {
    Payload(parts.flat_map(|p| p.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeBehavior {
    Honest,
    /// Emits a seeded random forged payload. Coordinate 0 encodes the slot,
    /// so two such outputs never coincide.
    CorruptedRandom { seed: u64 },
    /// Emits the honest output with coordinate 0 shifted by one. All
    /// coordinated nodes given the same input agree with each other.
    CorruptedCoordinated,
}

impl NodeBehavior {
    pub fn is_corrupted(self) -> bool {
        !matches!(self, NodeBehavior::Honest)
    }

    fn run(self, f: &LayerFunction, input: &Payload, slot: usize) -> Payload {
        match self {
            NodeBehavior::Honest => f.apply(input),
            NodeBehavior::CorruptedCoordinated => {
                let mut out = f.apply(input);
                let v = out.0[0];
                out.0[0] = if v >= MODULUS { MODULUS + (v - MODULUS + 1) % MODULUS } else { (v + 1) % MODULUS };
                out
            }
            NodeBehavior::CorruptedRandom { seed } => {
                let mut rng = seed::rng_from_seed(seed::derive(seed, slot as u64));
                let mut out: Vec<u64> = (0..f.dim()).map(|_| rng.random_range(MODULUS..2 * MODULUS)).collect();
                out[0] = MODULUS + slot as u64;
                Payload(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoteOutcome {
    Decided { payload: Payload, dissent: usize },
    /// No payload reached `n_min`, or two different payloads both did.
    Inconclusive,
}

/// Majority-of-identical-values decision.
///
/// `dissent` counts the results that differ from the decided payload.
pub fn quorum_vote(results: &[Payload], n_min: usize) -> Result<VoteOutcome, PipelineError> {
    if results.is_empty() {
        return Err(PipelineError::EmptyVote);
    }
    if n_min == 0 || n_min > results.len() {
        return Err(PipelineError::VoteThreshold { n_min, results: results.len() });
    }
    let mut counts: BTreeMap<&Payload, usize> = BTreeMap::new();
    for r in results {
        *counts.entry(r).or_default() += 1;
    }
    let mut winners = counts.into_iter().filter(|&(_, n)| n >= n_min);
    match (winners.next(), winners.next()) {
        (Some((payload, n)), None) => {
            Ok(VoteOutcome::Decided { payload: payload.clone(), dissent: results.len() - n })
        }
        _ => Ok(VoteOutcome::Inconclusive),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anomaly {
    pub layer: usize,
    pub sub_layer: usize,
    pub dissent: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Halt {
    pub layer: usize,
    pub sub_layer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceReport {
    /// What the accumulator received; `None` when a vote was inconclusive.
    pub final_payload: Option<Payload>,
    pub halted_at: Option<Halt>,
    pub matches_clean_reference: bool,
    /// Secured units whose vote had at least one dissenting result.
    pub anomalies: Vec<Anomaly>,
    /// Computations performed by each node.
    pub visit_counts: BTreeMap<NodeId, u64>,
    /// Executions of each `(layer, sub_layer)` unit.
    pub unit_visits: BTreeMap<(usize, usize), u64>,
}

impl InferenceReport {
    pub fn layer_visits(&self, layer: usize) -> u64 {
        self.unit_visits.range((layer, 0)..(layer + 1, 0)).map(|(_, v)| v).sum()
    }
}

pub fn execute_inference(
    network: &Network,
    plan: &DeploymentPlan,
    assignment: &SlotAssignment,
    behaviors: &BTreeMap<NodeId, NodeBehavior>,
    input: &Payload,
) -> Result<InferenceReport, PipelineError> {
    if plan.topology() != network.topology() {
        return Err(PipelineError::TopologyMismatch);
    }
    if input.len() != network.input_dim() {
        return Err(PipelineError::InputDimension { expected: network.input_dim(), got: input.len() });
    }
    let nodes = assignment.nodes();
    if nodes.len() != plan.total_slots() {
        return Err(PipelineError::AssignmentSize { expected: plan.total_slots(), got: nodes.len() });
    }
    if let Some(&missing) = nodes.iter().find(|n| !behaviors.contains_key(n)) {
        return Err(PipelineError::MissingBehavior(missing));
    }

    let n_min = plan.quorum().n_min();
    let reference = network.clean_reference(input);
    let mut report = InferenceReport {
        final_payload: None,
        halted_at: None,
        matches_clean_reference: false,
        anomalies: Vec::new(),
        visit_counts: BTreeMap::new(),
        unit_visits: BTreeMap::new(),
    };

    let mut current = input.clone();
    let mut units = plan.units().iter().peekable();
    for layer in 0..network.topology().layer_count() {
        let mut outputs = Vec::new();
        while let Some(unit) = units.next_if(|u| u.layer == layer) {
            let f = network.function(layer, unit.sub_layer);
            *report.unit_visits.entry((layer, unit.sub_layer)).or_default() += 1;
            let results: Vec<Payload> = (unit.start..unit.start + unit.replicas)
                .map(|slot| {
                    let node = nodes[slot];
                    *report.visit_counts.entry(node).or_default() += 1;
                    behaviors[&node].run(f, &current, slot)
                })
                .collect();
            let decided = if unit.secured {
                match quorum_vote(&results, n_min)? {
                    VoteOutcome::Decided { payload, dissent } => {
                        if dissent > 0 {
                            report.anomalies.push(Anomaly { layer, sub_layer: unit.sub_layer, dissent });
                        }
                        payload
                    }
                    VoteOutcome::Inconclusive => {
                        report.halted_at = Some(Halt { layer, sub_layer: unit.sub_layer });
                        return Ok(report);
                    }
                }
            } else {
                results.into_iter().next().expect("unsecured unit has one slot")
            };
            outputs.push(decided);
        }
        current = concat(outputs.into_iter());
    }
    report.matches_clean_reference = current == reference;
    report.final_payload = Some(current);
    Ok(report)
}

/// Behaviour map that marks the pool's corrupted nodes with `corrupted` and
/// every other node honest.
pub fn behaviors_for(
    node_count: usize,
    is_corrupted: impl Fn(NodeId) -> bool,
    corrupted: NodeBehavior,
) -> BTreeMap<NodeId, NodeBehavior> {
    (0..node_count as u64)
        .map(NodeId)
        .map(|n| (n, if is_corrupted(n) { corrupted } else { NodeBehavior::Honest }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorTarget {
    /// Computations by the node per pass.
    Node(NodeId),
    /// Fraction of passes that reached the layer.
    Layer(usize),
    /// Share of the layer's unit executions that went to this sub-layer.
    SubLayer { layer: usize, sub_layer: usize },
}

/// Visit-count estimate of a corruption factor over a stream of passes.
pub fn empirical_corruption_factor(
    reports: &[InferenceReport],
    topology: &DnnTopology,
    target: FactorTarget,
) -> Result<f64, PipelineError> {
    if reports.is_empty() {
        return Err(PipelineError::NoPasses);
    }
    let passes = reports.len() as f64;
    match target {
        FactorTarget::Node(node) => {
            let visits: u64 = reports.iter().map(|r| r.visit_counts.get(&node).copied().unwrap_or(0)).sum();
            Ok(visits as f64 / passes)
        }
        FactorTarget::Layer(layer) => {
            if layer >= topology.layer_count() {
                return Err(PipelineError::InvalidTarget(target));
            }
            let reached = reports.iter().filter(|r| r.layer_visits(layer) > 0).count();
            Ok(reached as f64 / passes)
        }
        FactorTarget::SubLayer { layer, sub_layer } => {
            match topology.layers().get(layer) {
                Some(Layer::Branched { sub_layers }) if sub_layer < *sub_layers => {}
                _ => return Err(PipelineError::InvalidTarget(target)),
            }
            let own: u64 = reports.iter().map(|r| r.unit_visits.get(&(layer, sub_layer)).copied().unwrap_or(0)).sum();
            let all: u64 = reports.iter().map(|r| r.layer_visits(layer)).sum();
            Ok(if all == 0 { 0.0 } else { own as f64 / all as f64 })
        }
    }
}
