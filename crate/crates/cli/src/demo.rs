//! Trust and pipeline demonstrations.

use std::io::Write;

use qudos_core::pipeline_sim::{
    behaviors_for, empirical_corruption_factor, execute_inference, FactorTarget, Network, NodeBehavior, Payload,
};
use qudos_core::seed;
use qudos_core::topology::{assign, AssignmentModel, DeploymentPlan, DnnTopology, NodePool, QuorumConfig};
use qudos_core::trust::{expected_verdict, Attack, Strategy, TrustScenario, Verdict};

use crate::CliError;

pub const TRUST_CHAIN_LENGTH: usize = 5;

pub fn parse_strategy(name: &str) -> Option<Strategy> {
    match name {
        "sequential" | "sequential-chain" => Some(Strategy::SequentialChain),
        "accumulator" | "accumulator-direct" => Some(Strategy::AccumulatorDirect),
        "ttp" | "trusted-third-party" => Some(Strategy::TrustedThirdParty),
        _ => None,
    }
}

pub fn parse_attack(name: &str) -> Option<Attack> {
    Attack::ALL.into_iter().find(|a| a.to_string() == name)
}

/// Run one strategy against one attack and print the report. Returns the
/// verdict and whether it matches the documented expectation.
pub fn trust_demo(
    strategy: Strategy,
    attack: Attack,
    demo_seed: u64,
    out: &mut dyn Write,
) -> Result<(Verdict, bool), CliError> {
    let scenario = TrustScenario::random(TRUST_CHAIN_LENGTH, &mut seed::rng_from_seed(demo_seed));
    let forwarded = scenario.attacked_chain(attack, &mut seed::rng_from_seed(seed::derive(demo_seed, 1)));
    let report = scenario.verify(strategy, &forwarded).map_err(|e| CliError::Usage(e.to_string()))?;
    let expected = expected_verdict(strategy, attack);
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
    writeln!(out, "strategy: {strategy}")?;
    writeln!(out, "attack: {attack}")?;
    writeln!(out, "chain: {} records forwarded, {} produced", forwarded.len(), scenario.chain.len())?;
    writeln!(out, "verdict: {}", report.verdict)?;
    writeln!(out, "offending_index: {}", opt(report.offending_index.map(|i| i.to_string())))?;
    writeln!(out, "offending_producer: {}", opt(report.offending_producer.map(|p| p.to_string())))?;
    writeln!(out, "expected: {expected}")?;
    let ok = report.verdict == expected;
    writeln!(out, "result: {}", if ok { "as documented" } else { "UNEXPECTED" })?;
    Ok((report.verdict, ok))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineDemo {
    pub layers: usize,
    pub quorum_count: usize,
    pub quorum_size: usize,
    pub corrupted: usize,
    pub behavior: NodeBehavior,
    pub passes: u64,
    pub seed: u64,
}

pub fn parse_behavior(name: &str, behavior_seed: u64) -> Option<NodeBehavior> {
    match name {
        "random" => Some(NodeBehavior::CorruptedRandom { seed: behavior_seed }),
        "coordinated" => Some(NodeBehavior::CorruptedCoordinated),
        _ => None,
    }
}

/// Run `passes` inferences, each with a fresh partition assignment, and
/// print aggregate counts.
pub fn pipeline_demo(demo: &PipelineDemo, out: &mut dyn Write) -> Result<(), CliError> {
    let usage = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());
    let topology = DnnTopology::sequential(demo.layers).map_err(|e| usage(&e))?;
    let quorum = QuorumConfig::majority(demo.quorum_size).map_err(|e| usage(&e))?;
    let plan = DeploymentPlan::with_quorum_count(topology.clone(), demo.quorum_count, quorum).map_err(|e| usage(&e))?;
    let pool = NodePool::with_first_corrupted(plan.total_slots(), demo.corrupted).map_err(|e| usage(&e))?;
    let network = Network::random(topology.clone(), 4, demo.seed);
    let behaviors = behaviors_for(pool.node_count(), |n| pool.is_corrupted(n), demo.behavior);

    let mut reports = Vec::with_capacity(demo.passes as usize);
    for pass in 0..demo.passes {
        let mut rng = seed::rng_from_seed(seed::derive(demo.seed, pass));
        let assignment = assign(AssignmentModel::Partition, &plan, &pool, &mut rng).map_err(|e| usage(&e))?;
        let input = Payload((0..4).map(|i| pass * 4 + i).collect());
        reports.push(execute_inference(&network, &plan, &assignment, &behaviors, &input).map_err(|e| usage(&e))?);
    }
    let clean = reports.iter().filter(|r| r.matches_clean_reference).count();
    let halted = reports.iter().filter(|r| r.halted_at.is_some()).count();
    let flagged = reports.iter().filter(|r| !r.anomalies.is_empty()).count();
    writeln!(out, "passes: {}", demo.passes)?;
    writeln!(out, "slots: {} ({} corrupted nodes)", plan.total_slots(), demo.corrupted)?;
    writeln!(out, "clean_results: {clean}")?;
    writeln!(out, "wrong_results: {}", reports.len() - clean - halted)?;
    writeln!(out, "halted: {halted}")?;
    writeln!(out, "passes_with_anomalies: {flagged}")?;
    if !reports.is_empty() {
        let last = demo.layers - 1;
        let reach = empirical_corruption_factor(&reports, &topology, FactorTarget::Layer(last)).map_err(|e| usage(&e))?;
        writeln!(out, "last_layer_visit_ratio: {reach:?}")?;
    }
    Ok(())
}
