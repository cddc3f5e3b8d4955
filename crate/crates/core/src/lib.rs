//! Error-budget distribution search for fault-tolerant quantum circuits.
//!
//! The crate estimates surface-code resources for a circuit under a
//! three-way error budget (logical qubits, T states, rotation synthesis),
//! searches the budget simplex for cheap distributions, learns a
//! random-forest predictor of good distributions, and evaluates that
//! predictor against the uniform split.
//!
//! | module | purpose |
//! |---|---|
//! | [`circuit`] | OpenQASM subset parser, logical counts, synthetic circuits |
//! | [`estimator`] | surface-code cost model |
//! | [`sampler`] | budget distributions on the simplex |
//! | [`dataset`] | best-distribution dataset accumulation |
//! | [`forest`] | multi-output random forest |
//! | [`evaluation`] | train/test split, evaluation report |
//! | [`cli`] | command-line front end |

pub mod circuit;
pub mod cli;
pub mod dataset;
pub mod estimator;
pub mod evaluation;
pub mod forest;
pub mod jsonl;
pub mod sampler;

pub use circuit::LogicalCounts;
pub use dataset::{CostMetric, DatasetRecord};
pub use estimator::{estimate, PhysicalParams, ResourceEstimate};
pub use forest::ForestModel;
pub use sampler::BudgetDistribution;
