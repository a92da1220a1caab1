//! DNN structure, quorum configuration and the mapping of layers onto
//! validator slots.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("a topology needs at least one layer")]
    NoLayers,
    #[error("branched layer {layer} has {sub_layers} sub-layers; at least 2 are required")]
    DegenerateBranch { layer: usize, sub_layers: usize },
    #[error("quorum size must be at least 1")]
    EmptyQuorum,
    #[error("threshold {0} is outside (0, 1]")]
    ThresholdOutOfRange(Ratio<u64>),
    #[error("n_min {n_min} is outside 1..={size}")]
    MinVotesOutOfRange { n_min: usize, size: usize },
    #[error("layer index {index} is out of range for {layers} layers")]
    LayerOutOfRange { index: usize, layers: usize },
    #[error("pool has {nodes} nodes but the plan has {slots} slots")]
    PoolSizeMismatch { nodes: usize, slots: usize },
    #[error("node pool is empty")]
    EmptyPool,
    #[error("corrupted node {node} is not in a pool of {nodes}")]
    CorruptedOutOfRange { node: u64, nodes: usize },
}

/// Identifier of a validator node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Sequential,
    /// A single-level branch whose sub-layers all run and rejoin before the
    /// next layer.
    Branched { sub_layers: usize },
}

impl Layer {
    /// Number of independently placed units (sub-layers) in this layer.
    pub fn units(&self) -> usize {
        match *self {
            Layer::Sequential => 1,
            Layer::Branched { sub_layers } => sub_layers,
        }
    }
}

/// An ordered chain of layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnnTopology {
    layers: Vec<Layer>,
}

impl DnnTopology {
    pub fn new(layers: Vec<Layer>) -> Result<Self, TopologyError> {
        if layers.is_empty() {
            return Err(TopologyError::NoLayers);
        }
        for (layer, l) in layers.iter().enumerate() {
            if let Layer::Branched { sub_layers } = *l {
                if sub_layers < 2 {
                    return Err(TopologyError::DegenerateBranch { layer, sub_layers });
                }
            }
        }
        Ok(Self { layers })
    }

    /// A purely sequential network of `layer_count` layers.
    pub fn sequential(layer_count: usize) -> Result<Self, TopologyError> {
        Self::new(vec![Layer::Sequential; layer_count])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, index: usize) -> Result<Layer, TopologyError> {
        self.layers
            .get(index)
            .copied()
            .ok_or(TopologyError::LayerOutOfRange { index, layers: self.layers.len() })
    }

    pub fn is_sequential(&self) -> bool {
        self.layers.iter().all(|l| *l == Layer::Sequential)
    }
}

/// Minimum number of identical votes for a quorum of `size` members at
/// threshold `t`: the smallest integer strictly greater than `t * size`,
/// capped at `size` so that `t = 1` means unanimity.
pub fn derive_n_min(size: usize, threshold: Ratio<u64>) -> Result<usize, TopologyError> {
    if size == 0 {
        return Err(TopologyError::EmptyQuorum);
    }
    if *threshold.numer() == 0 || threshold > Ratio::from_integer(1) {
        return Err(TopologyError::ThresholdOutOfRange(threshold));
    }
    let scaled = threshold.numer() * size as u64 / threshold.denom();
    Ok((scaled as usize + 1).min(size))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuorumConfig {
    size: usize,
    threshold: Option<Ratio<u64>>,
    n_min: usize,
}

impl QuorumConfig {
    /// Quorum whose `n_min` is derived from a threshold.
    pub fn new(size: usize, threshold: Ratio<u64>) -> Result<Self, TopologyError> {
        let n_min = derive_n_min(size, threshold)?;
        Ok(Self { size, threshold: Some(threshold), n_min })
    }

    /// Quorum with an explicit vote requirement and no threshold.
    pub fn with_min_votes(size: usize, n_min: usize) -> Result<Self, TopologyError> {
        if size == 0 {
            return Err(TopologyError::EmptyQuorum);
        }
        if n_min == 0 || n_min > size {
            return Err(TopologyError::MinVotesOutOfRange { n_min, size });
        }
        Ok(Self { size, threshold: None, n_min })
    }

    /// Simple-majority quorum (`t = 1/2`).
    pub fn majority(size: usize) -> Result<Self, TopologyError> {
        Self::new(size, Ratio::new(1, 2))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn threshold(&self) -> Option<Ratio<u64>> {
        self.threshold
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }
}

/// One validator position: replica `replica` of sub-layer `sub_layer` of
/// layer `layer`. Sequential layers have a single sub-layer `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub layer: usize,
    pub sub_layer: usize,
    pub replica: usize,
}

/// A contiguous block of slots computing one unit (a sequential layer or one
/// sub-layer of a branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitSlots {
    pub layer: usize,
    pub sub_layer: usize,
    /// Index of the first slot of this unit in [`DeploymentPlan::slots`].
    pub start: usize,
    /// Number of replicas; `quorum.size()` when secured, otherwise 1.
    pub replicas: usize,
    pub secured: bool,
}

/// Which layers are secured by quorums, and the resulting slot layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentPlan {
    topology: DnnTopology,
    secured: BTreeSet<usize>,
    quorum: QuorumConfig,
    total_slots: usize,
    units: Vec<UnitSlots>,
}

impl DeploymentPlan {
    pub fn build(
        topology: DnnTopology,
        secured: BTreeSet<usize>,
        quorum: QuorumConfig,
    ) -> Result<Self, TopologyError> {
        let layers = topology.layer_count();
        if let Some(&index) = secured.iter().find(|&&i| i >= layers) {
            return Err(TopologyError::LayerOutOfRange { index, layers });
        }
        let mut units = Vec::new();
        let mut start = 0;
        for (layer, l) in topology.layers().iter().enumerate() {
            let is_secured = secured.contains(&layer);
            let replicas = if is_secured { quorum.size() } else { 1 };
            for sub_layer in 0..l.units() {
                units.push(UnitSlots { layer, sub_layer, start, replicas, secured: is_secured });
                start += replicas;
            }
        }
        Ok(Self { topology, secured, quorum, total_slots: start, units })
    }

    /// Secure the first `count` layers.
    pub fn with_quorum_count(
        topology: DnnTopology,
        count: usize,
        quorum: QuorumConfig,
    ) -> Result<Self, TopologyError> {
        Self::build(topology, (0..count).collect(), quorum)
    }

    pub fn topology(&self) -> &DnnTopology {
        &self.topology
    }

    pub fn secured_layers(&self) -> &BTreeSet<usize> {
        &self.secured
    }

    /// The quorum count `q`.
    pub fn quorum_count(&self) -> usize {
        self.secured.len()
    }

    pub fn quorum(&self) -> &QuorumConfig {
        &self.quorum
    }

    pub fn total_slots(&self) -> usize {
        self.total_slots
    }

    pub fn units(&self) -> &[UnitSlots] {
        &self.units
    }

    /// All slots in layout order.
    pub fn slots(&self) -> Vec<Slot> {
        self.units
            .iter()
            .flat_map(|u| {
                (0..u.replicas).map(move |replica| Slot {
                    layer: u.layer,
                    sub_layer: u.sub_layer,
                    replica,
                })
            })
            .collect()
    }
}

/// `n` validators, some of which are corrupted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePool {
    node_count: usize,
    corrupted: BTreeSet<NodeId>,
}

impl NodePool {
    pub fn new(node_count: usize, corrupted: BTreeSet<NodeId>) -> Result<Self, TopologyError> {
        if let Some(node) = corrupted.iter().find(|n| n.0 as usize >= node_count) {
            return Err(TopologyError::CorruptedOutOfRange { node: node.0, nodes: node_count });
        }
        Ok(Self { node_count, corrupted })
    }

    /// Pool whose first `corrupted_count` nodes are corrupted. Under a
    /// uniformly random assignment the choice of which nodes are corrupted
    /// does not affect any probability.
    pub fn with_first_corrupted(
        node_count: usize,
        corrupted_count: usize,
    ) -> Result<Self, TopologyError> {
        Self::new(node_count, (0..corrupted_count as u64).map(NodeId).collect())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn corrupted(&self) -> &BTreeSet<NodeId> {
        &self.corrupted
    }

    pub fn corrupted_count(&self) -> usize {
        self.corrupted.len()
    }

    pub fn is_corrupted(&self, node: NodeId) -> bool {
        self.corrupted.contains(&node)
    }

    /// Dense lookup table indexed by node id.
    pub fn corruption_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.node_count];
        for n in &self.corrupted {
            mask[n.0 as usize] = true;
        }
        mask
    }
}

/// How nodes are bound to slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignmentModel {
    /// Uniform random bijection; the pool size must equal the slot count.
    Partition,
    /// Every slot independently draws a uniform node.
    WithReplacement,
}

impl fmt::Display for AssignmentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignmentModel::Partition => "partition",
            AssignmentModel::WithReplacement => "with-replacement",
        })
    }
}

/// Node assigned to each slot, indexed like [`DeploymentPlan::slots`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAssignment {
    nodes: Vec<NodeId>,
}

impl SlotAssignment {
    /// Wrap an explicit mapping, e.g. one built by hand in a test.
    pub fn from_nodes(plan: &DeploymentPlan, nodes: Vec<NodeId>) -> Result<Self, TopologyError> {
        if nodes.len() != plan.total_slots() {
            return Err(TopologyError::PoolSizeMismatch {
                nodes: nodes.len(),
                slots: plan.total_slots(),
            });
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_at(&self, slot_index: usize) -> NodeId {
        self.nodes[slot_index]
    }

    /// True when no node fills two slots.
    pub fn is_injective(&self) -> bool {
        let distinct: BTreeSet<_> = self.nodes.iter().collect();
        distinct.len() == self.nodes.len()
    }
}

pub fn assign_partition<R: Rng + ?Sized>(
    plan: &DeploymentPlan,
    pool: &NodePool,
    rng: &mut R,
) -> Result<SlotAssignment, TopologyError> {
    if pool.node_count() != plan.total_slots() {
        return Err(TopologyError::PoolSizeMismatch {
            nodes: pool.node_count(),
            slots: plan.total_slots(),
        });
    }
    let mut nodes: Vec<NodeId> = (0..pool.node_count() as u64).map(NodeId).collect();
    nodes.shuffle(rng);
    Ok(SlotAssignment { nodes })
}

pub fn assign_with_replacement<R: Rng + ?Sized>(
    plan: &DeploymentPlan,
    pool: &NodePool,
    rng: &mut R,
) -> Result<SlotAssignment, TopologyError> {
    if pool.node_count() == 0 {
        return Err(TopologyError::EmptyPool);
    }
    let n = pool.node_count() as u64;
    let nodes = (0..plan.total_slots()).map(|_| NodeId(rng.random_range(0..n))).collect();
    Ok(SlotAssignment { nodes })
}

pub fn assign<R: Rng + ?Sized>(
    model: AssignmentModel,
    plan: &DeploymentPlan,
    pool: &NodePool,
    rng: &mut R,
) -> Result<SlotAssignment, TopologyError> {
    match model {
        AssignmentModel::Partition => assign_partition(plan, pool, rng),
        AssignmentModel::WithReplacement => assign_with_replacement(plan, pool, rng),
    }
}
