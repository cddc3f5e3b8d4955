//! Dataset accumulation: for every circuit, evaluate the uniform distribution
//! plus `n_samples` random distributions and keep the cheapest one.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::LogicalCounts;
use crate::estimator::{estimate, EstimateError, PhysicalParams, ResourceEstimate};
use crate::jsonl;
use crate::sampler::{
    sample_distribution, stable_hash, task_rng, uniform_distribution, BudgetDistribution, BudgetError,
};

/// Quantity minimized when choosing the best distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CostMetric {
    /// physical qubits times runtime
    #[default]
    #[serde(rename = "spacetime")]
    SpaceTime,
    #[serde(rename = "qubits")]
    QubitsOnly,
    #[serde(rename = "time")]
    TimeOnly,
}

impl CostMetric {
    pub fn cost(self, e: &ResourceEstimate) -> f64 {
        match self {
            CostMetric::SpaceTime => e.space_time_cost,
            CostMetric::QubitsOnly => e.physical_qubits as f64,
            CostMetric::TimeOnly => e.runtime_seconds,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CostMetric::SpaceTime => "spacetime",
            CostMetric::QubitsOnly => "qubits",
            CostMetric::TimeOnly => "time",
        }
    }
}

impl fmt::Display for CostMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spacetime" => Ok(CostMetric::SpaceTime),
            "qubits" => Ok(CostMetric::QubitsOnly),
            "time" => Ok(CostMetric::TimeOnly),
            other => Err(format!("unknown metric `{other}` (spacetime|qubits|time)")),
        }
    }
}

/// One circuit's counts together with its best-found distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub circuit_id: String,
    pub counts: LogicalCounts,
    pub best_distribution: BudgetDistribution,
    pub best_cost: f64,
    pub uniform_cost: f64,
    pub total_budget: f64,
    pub metric: CostMetric,
    pub n_samples: u64,
    pub seed: u64,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<(), String> {
        self.counts.validate().map_err(|e| e.to_string())?;
        self.best_distribution.validate().map_err(|e| e.to_string())?;
        if self.best_distribution.total != self.total_budget {
            return Err(format!(
                "best_distribution total {:e} differs from total_budget {:e}",
                self.best_distribution.total, self.total_budget
            ));
        }
        if !(self.best_cost.is_finite() && self.best_cost > 0.0) {
            return Err(format!("best_cost {} is not a positive number", self.best_cost));
        }
        if !(self.uniform_cost.is_finite() && self.uniform_cost > 0.0) {
            return Err(format!("uniform_cost {} is not a positive number", self.uniform_cost));
        }
        if self.best_cost > self.uniform_cost {
            return Err(format!(
                "best_cost {:e} exceeds uniform_cost {:e}",
                self.best_cost, self.uniform_cost
            ));
        }
        if self.n_samples == 0 {
            return Err("n_samples must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error("accumulation failed: every circuit was skipped")]
    AccumulationFailed { skipped: Vec<Skipped> },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: schema error: {reason}")]
    Schema { line: usize, reason: String },
    #[error("record `{circuit_id}` (line {line}): invariant violation: {reason}")]
    InvariantViolation {
        circuit_id: String,
        line: usize,
        reason: String,
    },
}

/// A candidate (or a whole circuit, when `candidate` is `None`) that could not
/// be estimated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub circuit_id: String,
    pub candidate: Option<usize>,
    pub error: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AccumulateConfig {
    pub n_samples: u64,
    pub total_budget: f64,
    pub metric: CostMetric,
    pub seed: u64,
    pub params: PhysicalParams,
    /// Worker threads; the output does not depend on this.
    pub jobs: usize,
}

impl AccumulateConfig {
    pub fn new(n_samples: u64, total_budget: f64, metric: CostMetric, seed: u64) -> Self {
        Self {
            n_samples,
            total_budget,
            metric,
            seed,
            params: PhysicalParams::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Accumulation {
    pub records: Vec<DatasetRecord>,
    pub skipped: Vec<Skipped>,
}

/// Candidate distributions for one circuit: the uniform distribution at
/// index 0 followed by `n_samples` draws from the circuit's own stream.
/// The list for `n` is a prefix of the list for any larger `n`.
pub fn candidate_distributions(
    circuit_id: &str,
    n_samples: u64,
    total_budget: f64,
    seed: u64,
) -> Result<Vec<BudgetDistribution>, BudgetError> {
    let mut rng = task_rng(seed, stable_hash(circuit_id));
    let mut out = Vec::with_capacity(n_samples as usize + 1);
    out.push(uniform_distribution(total_budget)?);
    for _ in 0..n_samples {
        out.push(sample_distribution(&mut rng, total_budget)?);
    }
    Ok(out)
}

fn skip(circuit_id: &str, candidate: Option<usize>, e: &EstimateError) -> Skipped {
    Skipped {
        circuit_id: circuit_id.to_string(),
        candidate,
        error: e.name(),
        detail: e.to_string(),
    }
}

fn accumulate_one(
    circuit_id: &str,
    counts: &LogicalCounts,
    cfg: &AccumulateConfig,
) -> Result<(Option<DatasetRecord>, Vec<Skipped>), BudgetError> {
    let candidates = candidate_distributions(circuit_id, cfg.n_samples, cfg.total_budget, cfg.seed)?;
    let mut skipped = Vec::new();

    let uniform_cost = match estimate(counts, &candidates[0], &cfg.params) {
        Ok(e) => cfg.metric.cost(&e),
        Err(e) => {
            skipped.push(skip(circuit_id, None, &e));
            return Ok((None, skipped));
        }
    };
    let mut best = (0, uniform_cost);
    for (idx, cand) in candidates.iter().enumerate().skip(1) {
        match estimate(counts, cand, &cfg.params) {
            Ok(e) => {
                let cost = cfg.metric.cost(&e);
                // strict comparison: ties keep the lower index
                if cost < best.1 {
                    best = (idx, cost);
                }
            }
            Err(e) => skipped.push(skip(circuit_id, Some(idx), &e)),
        }
    }
    let record = DatasetRecord {
        circuit_id: circuit_id.to_string(),
        counts: *counts,
        best_distribution: candidates[best.0],
        best_cost: best.1,
        uniform_cost,
        total_budget: cfg.total_budget,
        metric: cfg.metric,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
    };
    Ok((Some(record), skipped))
}

/// Runs the sampling loop over all circuits. Records come back in input
/// order and are identical for any `cfg.jobs`.
pub fn accumulate(circuits: &[(String, LogicalCounts)], cfg: &AccumulateConfig) -> Result<Accumulation, DatasetError> {
    if cfg.n_samples == 0 {
        return Err(DatasetError::InvalidConfig("n_samples must be at least 1".into()));
    }
    if circuits.is_empty() {
        return Err(DatasetError::InvalidConfig("no circuits given".into()));
    }
    uniform_distribution(cfg.total_budget)?;

    let run = |(id, counts): &(String, LogicalCounts)| accumulate_one(id, counts, cfg);
    let results: Vec<_> = if cfg.jobs <= 1 {
        circuits.iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| DatasetError::InvalidConfig(e.to_string()))?
            .install(|| circuits.par_iter().map(run).collect())
    };

    let mut out = Accumulation::default();
    for result in results {
        let (record, skipped) = result?;
        out.records.extend(record);
        out.skipped.extend(skipped);
    }
    if out.records.is_empty() {
        return Err(DatasetError::AccumulationFailed { skipped: out.skipped });
    }
    Ok(out)
}

/// Writes records as JSON lines with 17-significant-digit floats.
pub fn save_dataset(records: &[DatasetRecord], path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = jsonl::to_line(r).expect("records always serialize");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Parses JSON-lines dataset text, validating every record. Blank lines are ignored.
pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(line).map_err(|e| DatasetError::Schema {
            line: line_no,
            reason: e.to_string(),
        })?;
        record.validate().map_err(|reason| DatasetError::InvariantViolation {
            circuit_id: record.circuit_id.clone(),
            line: line_no,
            reason,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}
