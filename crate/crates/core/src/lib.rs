//! Security analytics for quorum-replicated distributed DNN deployments.
//!
//! The layers of a DNN are mapped onto validator nodes. Layers may be secured
//! by a quorum of replicas whose decision requires `n_min` identical results.
//! This crate provides:
//!
//! - [`topology`]: DNN structure, quorum configuration, deployment plans and
//!   node-to-slot assignment models.
//! - [`metrics`]: closed-form corruption factors and hypergeometric selection
//!   probabilities.
//! - [`attack_sim`]: a deterministic, parallel Monte Carlo estimator of the
//!   attack success probability, plus an exact enumerator for small plans.
//! - [`trust`]: the three chain-of-trust verification strategies over
//!   abstract keyed signatures.
//! - [`pipeline_sim`]: an end-to-end simulated inference with quorum voting,
//!   anomaly reporting and visit counting.

pub mod attack_sim;
pub mod metrics;
pub mod pipeline_sim;
pub mod seed;
pub mod topology;
pub mod trust;

pub use num_rational::Ratio;
