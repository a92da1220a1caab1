//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! [topology]
//! layers = 10              # sequential network; or `branches = [1, 2, 1]`
//!
//! [quorum]
//! size = 3
//! threshold = "1/2"        # or `n_min = 2`
//!
//! [deployment]
//! quorum_count = 10        # or `secured = [0, 3]`, or `secure_all = true`
//!
//! [pool]
//! corrupted = 5            # or `corrupted_fraction = "1/10"`
//! # nodes = 40             # with-replacement model only
//!
//! [simulation]
//! model = "partition"      # or "with-replacement"
//! iterations = 100000
//! master_seed = 7
//!
//! [sweep]                  # optional
//! parameter = "q"          # q, s, l, c or n_min
//! values = [0, 1, 2]       # or `range = [0, 10]`, inclusive
//! ```
//!
//! Unknown keys are rejected. Errors name the offending line.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use num_rational::Ratio;
use qudos_core::attack_sim::{
    Corruption, ScenarioTemplate, SecuredLayers, SweepParameter, VoteRule, DEFAULT_ITERATIONS,
};
use qudos_core::topology::{AssignmentModel, DnnTopology, Layer};
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    topology: Spanned<TopologySection>,
    quorum: Spanned<QuorumSection>,
    deployment: Spanned<DeploymentSection>,
    pool: Spanned<PoolSection>,
    #[serde(default)]
    simulation: SimulationSection,
    sweep: Option<Spanned<SweepSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    layers: Option<Spanned<usize>>,
    branches: Option<Spanned<Vec<usize>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuorumSection {
    size: Spanned<usize>,
    threshold: Option<Spanned<String>>,
    n_min: Option<Spanned<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeploymentSection {
    quorum_count: Option<Spanned<usize>>,
    secured: Option<Spanned<Vec<usize>>>,
    secure_all: Option<Spanned<bool>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolSection {
    corrupted: Option<Spanned<usize>>,
    corrupted_fraction: Option<Spanned<String>>,
    nodes: Option<Spanned<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationSection {
    model: Option<Spanned<String>>,
    iterations: Option<Spanned<u64>>,
    master_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    parameter: Spanned<String>,
    values: Option<Spanned<Vec<u64>>>,
    range: Option<Spanned<[u64; 2]>>,
}

/// A parsed scenario: the base template and an optional sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub template: ScenarioTemplate,
    pub sweep: Option<Sweep>,
    /// Line of the `[sweep]` values, for error reporting.
    pub sweep_line: Option<usize>,
    /// Whether the file set `master_seed`.
    pub seed_from_file: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<u64>,
}

struct Source<'a>(&'a str);

impl Source<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.0[..span.start.min(self.0.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, message: impl fmt::Display) -> Result<T, ScenarioError> {
        Err(ScenarioError::Invalid { line: self.line(span), message: message.to_string() })
    }
}

fn parse_ratio(text: &str) -> Option<Ratio<u64>> {
    text.trim().parse::<Ratio<u64>>().ok()
}

pub fn parse_model(name: &str) -> Option<AssignmentModel> {
    match name {
        "partition" => Some(AssignmentModel::Partition),
        "with-replacement" => Some(AssignmentModel::WithReplacement),
        _ => None,
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
        let src = Source(text);

        let topo_span = file.topology.span();
        let topology = match (&file.topology.get_ref().layers, &file.topology.get_ref().branches) {
            (Some(l), None) => DnnTopology::sequential(*l.get_ref()).or_else(|e| src.err(l.span(), e))?,
            (None, Some(b)) => {
                let layers = b
                    .get_ref()
                    .iter()
                    .map(|&units| match units {
                        0 => src.err(b.span(), "a layer needs at least one unit"),
                        1 => Ok(Layer::Sequential),
                        n => Ok(Layer::Branched { sub_layers: n }),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                DnnTopology::new(layers).or_else(|e| src.err(b.span(), e))?
            }
            _ => return src.err(topo_span, "[topology] needs exactly one of `layers` or `branches`"),
        };

        let quorum = file.quorum.get_ref();
        let quorum_size = *quorum.size.get_ref();
        if quorum_size == 0 {
            return src.err(quorum.size.span(), "quorum size must be at least 1");
        }
        let votes = match (&quorum.threshold, &quorum.n_min) {
            (Some(t), None) => match parse_ratio(t.get_ref()) {
                Some(r) if r <= Ratio::from_integer(1) => VoteRule::Threshold(r),
                _ => return src.err(t.span(), format!("threshold `{}` must be a ratio in [0, 1] such as 1/2", t.get_ref())),
            },
            (None, Some(n)) => VoteRule::MinVotes(*n.get_ref()),
            _ => return src.err(file.quorum.span(), "[quorum] needs exactly one of `threshold` or `n_min`"),
        };

        let dep = file.deployment.get_ref();
        let secured = match (&dep.quorum_count, &dep.secured, &dep.secure_all) {
            (Some(q), None, None) => SecuredLayers::Count(*q.get_ref()),
            (None, Some(list), None) => {
                let set: BTreeSet<usize> = list.get_ref().iter().copied().collect();
                if set.len() != list.get_ref().len() {
                    return src.err(list.span(), "secured layer list contains duplicates");
                }
                SecuredLayers::Explicit(set)
            }
            (None, None, Some(all)) if *all.get_ref() => SecuredLayers::All,
            (None, None, Some(_)) => SecuredLayers::Count(0),
            _ => {
                return src.err(
                    file.deployment.span(),
                    "[deployment] needs exactly one of `quorum_count`, `secured` or `secure_all`",
                )
            }
        };

        let sim = &file.simulation;
        let model = match &sim.model {
            None => AssignmentModel::Partition,
            Some(m) => parse_model(m.get_ref()).map_or_else(
                || src.err(m.span(), format!("unknown model `{}`; use partition or with-replacement", m.get_ref())),
                Ok,
            )?,
        };
        let iterations = match &sim.iterations {
            None => DEFAULT_ITERATIONS,
            Some(i) if *i.get_ref() == 0 => return src.err(i.span(), "iterations must be positive"),
            Some(i) => *i.get_ref(),
        };

        let pool = file.pool.get_ref();
        let corruption = match (&pool.corrupted, &pool.corrupted_fraction) {
            (Some(c), None) => Corruption::Count(*c.get_ref()),
            (None, Some(f)) => match parse_ratio(f.get_ref()) {
                Some(r) if r <= Ratio::from_integer(1) => Corruption::FractionOfPool(r),
                _ => return src.err(f.span(), format!("corrupted_fraction `{}` must be a ratio in [0, 1]", f.get_ref())),
            },
            _ => return src.err(file.pool.span(), "[pool] needs exactly one of `corrupted` or `corrupted_fraction`"),
        };
        let pool_size = match (&pool.nodes, model) {
            (None, AssignmentModel::WithReplacement) => {
                return src.err(file.pool.span(), "the with-replacement model needs `nodes`")
            }
            (Some(n), AssignmentModel::Partition) => {
                return src.err(
                    n.span(),
                    "`nodes` is only used by the with-replacement model; a partition pool has one node per slot",
                )
            }
            (n, _) => n.as_ref().map(|n| *n.get_ref()),
        };

        let template = ScenarioTemplate {
            topology,
            quorum_size,
            votes,
            secured,
            corruption,
            model,
            iterations,
            master_seed: sim.master_seed.unwrap_or(DEFAULT_SEED),
            pool_size,
        };

        let (sweep, sweep_line) = match &file.sweep {
            None => (None, None),
            Some(s) => {
                let s_ref = s.get_ref();
                let Some(parameter) = SweepParameter::parse(s_ref.parameter.get_ref()) else {
                    return src.err(
                        s_ref.parameter.span(),
                        format!("unknown sweep parameter `{}`; use q, s, l, c or n_min", s_ref.parameter.get_ref()),
                    );
                };
                let (values, span) = match (&s_ref.values, &s_ref.range) {
                    (Some(v), None) => (v.get_ref().clone(), v.span()),
                    (None, Some(r)) => {
                        let [a, b] = *r.get_ref();
                        if a > b {
                            return src.err(r.span(), "sweep range start exceeds its end");
                        }
                        ((a..=b).collect(), r.span())
                    }
                    _ => return src.err(s.span(), "[sweep] needs exactly one of `values` or `range`"),
                };
                if values.is_empty() {
                    return src.err(span, "sweep has no values");
                }
                (Some(Sweep { parameter, values }), Some(src.line(span)))
            }
        };

        let scenario = Scenario { template, sweep, sweep_line, seed_from_file: sim.master_seed.is_some() };
        if scenario.sweep.is_none() {
            scenario.template.resolve().or_else(|e| src.err(topo_span, e))?;
        }
        Ok(scenario)
    }
}
