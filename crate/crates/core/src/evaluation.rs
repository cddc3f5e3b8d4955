//! Train/test protocol and evaluation of predicted distributions against the
//! uniform baseline.
//!
//! For each test circuit the predicted distribution and the uniform
//! distribution are both estimated; the cheaper of the two is chosen, so the
//! reported improvement `1 - chosen/uniform` is never negative.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CostMetric, DatasetRecord};
use crate::estimator::{estimate, EstimateError, PhysicalParams};
use crate::forest::{self, ForestError, ForestModel, Hyperparams};
use crate::sampler::{uniform_distribution, BudgetDistribution, BudgetError};

/// Bins of the improvement histogram over `[0, 1]`.
pub const IMPROVEMENT_BINS: usize = 25;
/// Bins of each budget-component histogram over `[0, total_budget]`.
pub const BUDGET_BINS: usize = 30;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset too small to split: {n} records")]
    DatasetTooSmall { n: usize },
    #[error("split ratio must lie in (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("record `{circuit_id}` has total budget {record} but the model was trained for {model}")]
    BudgetMismatch {
        circuit_id: String,
        record: f64,
        model: f64,
    },
    #[error("uniform baseline failed for `{circuit_id}`: {source}")]
    Baseline {
        circuit_id: String,
        #[source]
        source: EstimateError,
    },
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("cannot write {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Shuffles with a seeded generator and cuts at `floor(ratio * n)`.
pub fn split(
    dataset: &[DatasetRecord],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, Vec<DatasetRecord>), EvalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::InvalidRatio(ratio));
    }
    let n = dataset.len();
    let n_train = (ratio * n as f64).floor() as usize;
    if n < 4 || n_train == 0 || n_train == n {
        return Err(EvalError::DatasetTooSmall { n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub circuit_id: String,
    pub uniform_cost: f64,
    /// Cost of the predicted distribution; equals `uniform_cost` on fallback.
    pub predicted_cost: f64,
    pub chosen_cost: f64,
    pub improvement_fraction: f64,
    pub predicted_distribution: BudgetDistribution,
    /// The prediction could not be estimated and the uniform distribution was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub n_rows: u64,
    pub fraction_improved: f64,
    pub mean_improvement: f64,
    pub max_improvement: f64,
    /// Mean predicted component as a fraction of the total budget.
    pub mean_logical_fraction: f64,
    pub mean_tstates_fraction: f64,
    pub mean_rotations_fraction: f64,
    pub fallback_count: u64,
}

/// Mean budget components of a series of distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetStatistics {
    pub mean_logical: f64,
    pub mean_t_states: f64,
    pub mean_rotations: f64,
    pub mean_logical_fraction: f64,
    pub mean_tstates_fraction: f64,
    pub mean_rotations_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins over `[lo, hi]`; values outside are clamped into the
    /// first or last bin.
    pub fn from_values(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for v in values {
            let idx = ((v - lo) / width).floor();
            let idx = if idx.is_nan() || idx < 0.0 {
                0
            } else {
                (idx as usize).min(bins - 1)
            };
            counts[idx] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        (0..self.counts.len()).map(move |i| (self.lo + i as f64 * width, self.lo + (i + 1) as f64 * width))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentHistograms {
    pub logical: Histogram,
    pub t_states: Histogram,
    pub rotations: Histogram,
}

impl ComponentHistograms {
    /// The single binning path shared by predictions and labels.
    fn of(dists: &[BudgetDistribution], total: f64) -> Self {
        let bin = |k: usize| Histogram::from_values(dists.iter().map(|d| d.components()[k]), 0.0, total, BUDGET_BINS);
        Self {
            logical: bin(0),
            t_states: bin(1),
            rotations: bin(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub improvement: Histogram,
    pub predicted: ComponentHistograms,
    pub labels: ComponentHistograms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub total_budget: f64,
    pub metric: CostMetric,
    pub model_seed: u64,
    pub split_seed: Option<u64>,
    pub split_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub aggregates: Aggregates,
    pub predicted_statistics: BudgetStatistics,
    /// Statistics of the dataset's best-found distributions for the same rows.
    pub label_statistics: BudgetStatistics,
    pub histograms: Histograms,
    pub rows: Vec<EvaluationRow>,
}

impl EvaluationReport {
    pub fn with_split(mut self, seed: u64, ratio: f64) -> Self {
        self.metadata.split_seed = Some(seed);
        self.metadata.split_ratio = Some(ratio);
        self
    }
}

fn statistics(dists: &[BudgetDistribution]) -> BudgetStatistics {
    let n = dists.len().max(1) as f64;
    let mut abs = [0.0; 3];
    let mut frac = [0.0; 3];
    for d in dists {
        for k in 0..3 {
            abs[k] += d.components()[k];
            frac[k] += d.fractions()[k];
        }
    }
    BudgetStatistics {
        mean_logical: abs[0] / n,
        mean_t_states: abs[1] / n,
        mean_rotations: abs[2] / n,
        mean_logical_fraction: frac[0] / n,
        mean_tstates_fraction: frac[1] / n,
        mean_rotations_fraction: frac[2] / n,
    }
}

fn evaluate_row(
    model: &ForestModel,
    record: &DatasetRecord,
    params: &PhysicalParams,
) -> Result<EvaluationRow, EvalError> {
    let metric = model.metadata.metric;
    let uniform = uniform_distribution(model.metadata.total_budget)?;
    let uniform_cost = estimate(&record.counts, &uniform, params)
        .map(|e| metric.cost(&e))
        .map_err(|source| EvalError::Baseline {
            circuit_id: record.circuit_id.clone(),
            source,
        })?;
    let predicted = model.predict(&record.counts);
    let (predicted_cost, fallback) = match estimate(&record.counts, &predicted, params) {
        Ok(e) => (metric.cost(&e), false),
        Err(_) => (uniform_cost, true),
    };
    let chosen_cost = predicted_cost.min(uniform_cost);
    Ok(EvaluationRow {
        circuit_id: record.circuit_id.clone(),
        uniform_cost,
        predicted_cost,
        chosen_cost,
        improvement_fraction: 1.0 - chosen_cost / uniform_cost,
        predicted_distribution: predicted,
        fallback,
    })
}

/// Evaluates `model` on `test` with a single thread.
pub fn evaluate(
    model: &ForestModel,
    test: &[DatasetRecord],
    params: &PhysicalParams,
) -> Result<EvaluationReport, EvalError> {
    evaluate_with_jobs(model, test, params, 1)
}

/// Evaluates `model` on `test`; rows are estimated on `jobs` threads and
/// reduced in input order, so the report does not depend on `jobs`.
pub fn evaluate_with_jobs(
    model: &ForestModel,
    test: &[DatasetRecord],
    params: &PhysicalParams,
    jobs: usize,
) -> Result<EvaluationReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let total = model.metadata.total_budget;
    if let Some(r) = test.iter().find(|r| r.total_budget != total) {
        return Err(EvalError::BudgetMismatch {
            circuit_id: r.circuit_id.clone(),
            record: r.total_budget,
            model: total,
        });
    }

    let results: Vec<_> = if jobs <= 1 {
        test.iter().map(|r| evaluate_row(model, r, params)).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| EvalError::Pool(e.to_string()))?
            .install(|| test.par_iter().map(|r| evaluate_row(model, r, params)).collect())
    };
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let n = rows.len() as f64;
    let improvements: Vec<f64> = rows.iter().map(|r| r.improvement_fraction).collect();
    let predicted: Vec<BudgetDistribution> = rows.iter().map(|r| r.predicted_distribution).collect();
    let labels: Vec<BudgetDistribution> = test.iter().map(|r| r.best_distribution).collect();
    let predicted_statistics = statistics(&predicted);

    let aggregates = Aggregates {
        n_rows: rows.len() as u64,
        fraction_improved: improvements.iter().filter(|&&x| x > 0.0).count() as f64 / n,
        mean_improvement: improvements.iter().sum::<f64>() / n,
        max_improvement: improvements.iter().copied().fold(0.0, f64::max),
        mean_logical_fraction: predicted_statistics.mean_logical_fraction,
        mean_tstates_fraction: predicted_statistics.mean_tstates_fraction,
        mean_rotations_fraction: predicted_statistics.mean_rotations_fraction,
        fallback_count: rows.iter().filter(|r| r.fallback).count() as u64,
    };
    let histograms = Histograms {
        improvement: Histogram::from_values(improvements.iter().copied(), 0.0, 1.0, IMPROVEMENT_BINS),
        predicted: ComponentHistograms::of(&predicted, total),
        labels: ComponentHistograms::of(&labels, total),
    };

    Ok(EvaluationReport {
        metadata: ReportMetadata {
            total_budget: total,
            metric: model.metadata.metric,
            model_seed: model.metadata.seed,
            split_seed: None,
            split_ratio: None,
        },
        aggregates,
        predicted_statistics,
        label_statistics: statistics(&labels),
        histograms,
        rows,
    })
}

/// Splits, trains on the train side and evaluates on the test side.
pub fn run_protocol(
    dataset: &[DatasetRecord],
    ratio: f64,
    seed: u64,
    hyperparams: &Hyperparams,
    params: &PhysicalParams,
    jobs: usize,
) -> Result<(ForestModel, EvaluationReport), EvalError> {
    let (train, test) = split(dataset, ratio, seed)?;
    let model = forest::train(&train, hyperparams, seed)?;
    let report = evaluate_with_jobs(&model, &test, params, jobs)?.with_split(seed, ratio);
    Ok((model, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (json|csv)")),
        }
    }
}

/// CSV bundle file names written by [`export_report`].
pub const CSV_ROWS: &str = "rows.csv";
pub const CSV_AGGREGATES: &str = "aggregates.csv";
pub const CSV_IMPROVEMENT_HISTOGRAM: &str = "histogram_improvement.csv";
pub const CSV_PREDICTED_HISTOGRAM: &str = "histogram_budget_predicted.csv";
pub const CSV_LABEL_HISTOGRAM: &str = "histogram_budget_labels.csv";

pub fn report_to_json(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report always serializes");
    s.push('\n');
    s
}

pub fn load_report(path: &Path) -> Result<EvaluationReport, EvalError> {
    let io = |reason: String| EvalError::Io {
        path: path.display().to_string(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| io(e.to_string()))
}

/// Writes the report. For JSON `path` is the output file; for CSV it is a
/// directory receiving the per-row table, the aggregates and the histograms.
pub fn export_report(report: &EvaluationReport, path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    match format {
        ReportFormat::Json => fs::write(path, report_to_json(report)).map_err(|e| EvalError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }),
        ReportFormat::Csv => {
            fs::create_dir_all(path).map_err(|e| EvalError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            write_csv_bundle(report, path)
        }
    }
}

fn write_csv_bundle(report: &EvaluationReport, dir: &Path) -> Result<(), EvalError> {
    fn writer(path: &Path) -> Result<csv::Writer<fs::File>, EvalError> {
        csv::Writer::from_path(path).map_err(|e| EvalError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
    fn finish(path: &Path, result: csv::Result<()>, w: csv::Writer<fs::File>) -> Result<(), EvalError> {
        result
            .and_then(|_| w.into_inner().map(drop).map_err(|e| e.into_error().into()))
            .map_err(|e| EvalError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })
    }

    let path = dir.join(CSV_ROWS);
    let mut w = writer(&path)?;
    let result = (|| {
        w.write_record([
            "circuit_id",
            "uniform_cost",
            "predicted_cost",
            "chosen_cost",
            "improvement_fraction",
            "predicted_logical",
            "predicted_t_states",
            "predicted_rotations",
            "fallback",
        ])?;
        for r in &report.rows {
            let d = r.predicted_distribution;
            w.write_record([
                r.circuit_id.clone(),
                r.uniform_cost.to_string(),
                r.predicted_cost.to_string(),
                r.chosen_cost.to_string(),
                r.improvement_fraction.to_string(),
                d.logical.to_string(),
                d.t_states.to_string(),
                d.rotations.to_string(),
                r.fallback.to_string(),
            ])?;
        }
        Ok(())
    })();
    finish(&path, result, w)?;

    let path = dir.join(CSV_AGGREGATES);
    let mut w = writer(&path)?;
    let result = (|| {
        let a = &report.aggregates;
        let m = &report.metadata;
        let p = &report.predicted_statistics;
        let l = &report.label_statistics;
        w.write_record(["key", "value"])?;
        let entries: Vec<(&str, String)> = vec![
            ("total_budget", m.total_budget.to_string()),
            ("metric", m.metric.to_string()),
            ("model_seed", m.model_seed.to_string()),
            ("split_seed", m.split_seed.map(|s| s.to_string()).unwrap_or_default()),
            ("split_ratio", m.split_ratio.map(|s| s.to_string()).unwrap_or_default()),
            ("n_rows", a.n_rows.to_string()),
            ("fraction_improved", a.fraction_improved.to_string()),
            ("mean_improvement", a.mean_improvement.to_string()),
            ("max_improvement", a.max_improvement.to_string()),
            ("mean_logical_fraction", a.mean_logical_fraction.to_string()),
            ("mean_tstates_fraction", a.mean_tstates_fraction.to_string()),
            ("mean_rotations_fraction", a.mean_rotations_fraction.to_string()),
            ("fallback_count", a.fallback_count.to_string()),
            ("predicted_mean_logical", p.mean_logical.to_string()),
            ("predicted_mean_t_states", p.mean_t_states.to_string()),
            ("predicted_mean_rotations", p.mean_rotations.to_string()),
            ("label_mean_logical", l.mean_logical.to_string()),
            ("label_mean_t_states", l.mean_t_states.to_string()),
            ("label_mean_rotations", l.mean_rotations.to_string()),
            ("label_mean_logical_fraction", l.mean_logical_fraction.to_string()),
            ("label_mean_tstates_fraction", l.mean_tstates_fraction.to_string()),
            ("label_mean_rotations_fraction", l.mean_rotations_fraction.to_string()),
        ];
        for (k, v) in entries {
            w.write_record([k, v.as_str()])?;
        }
        Ok(())
    })();
    finish(&path, result, w)?;

    let path = dir.join(CSV_IMPROVEMENT_HISTOGRAM);
    let mut w = writer(&path)?;
    let result = (|| {
        let h = &report.histograms.improvement;
        w.write_record(["bin_lo", "bin_hi", "count"])?;
        for ((lo, hi), c) in h.edges().zip(&h.counts) {
            w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
        }
        Ok(())
    })();
    finish(&path, result, w)?;

    for (name, hists) in [
        (CSV_PREDICTED_HISTOGRAM, &report.histograms.predicted),
        (CSV_LABEL_HISTOGRAM, &report.histograms.labels),
    ] {
        let path = dir.join(name);
        let mut w = writer(&path)?;
        let result = (|| {
            w.write_record(["bin_lo", "bin_hi", "logical", "t_states", "rotations"])?;
            for (i, (lo, hi)) in hists.logical.edges().enumerate() {
                w.write_record([
                    lo.to_string(),
                    hi.to_string(),
                    hists.logical.counts[i].to_string(),
                    hists.t_states.counts[i].to_string(),
                    hists.rotations.counts[i].to_string(),
                ])?;
            }
            Ok(())
        })();
        finish(&path, result, w)?;
    }
    Ok(())
}
