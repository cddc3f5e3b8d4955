//! Command-line front end. Each subcommand reads and writes the file formats
//! of the owning module, so stages hand off through files.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::circuit::{
    derive_logical_counts, generate_synthetic_circuit, load_logical_counts, parse_qasm, save_logical_counts,
    LogicalCounts, SizeClass,
};
use crate::dataset::{accumulate, load_dataset, save_dataset, AccumulateConfig, CostMetric};
use crate::estimator::{estimate, PhysicalParams, ResourceEstimate};
use crate::evaluation::{self, export_report, load_report, split, ReportFormat};
use crate::forest::{self, load_model, save_model, Hyperparams};
use crate::jsonl;
use crate::sampler::{derive_seed, normalize, sample_distribution, task_rng, uniform_distribution, BudgetDistribution};

/// Environment variable naming a default `--params` file.
pub const PARAMS_ENV: &str = "FTQC_BUDGET_PARAMS";

#[derive(Debug, Parser)]
#[command(
    name = "ftqc-budget",
    version,
    about = "Error-budget distributions for fault-tolerant circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate resources for one circuit under a budget distribution.
    Estimate(EstimateArgs),
    /// Print random budget distributions as JSON lines.
    Sample(SampleArgs),
    /// Search the best distribution for every circuit and write a dataset.
    Accumulate(AccumulateArgs),
    /// Train a random forest on a dataset.
    Train(TrainArgs),
    /// Predict a distribution for one circuit.
    Predict(PredictArgs),
    /// Evaluate a model against the uniform distribution on a test split.
    Evaluate(EvaluateArgs),
    /// Convert an evaluation report to CSV (or re-emit JSON).
    Report(ReportArgs),
    /// Write synthetic logical-counts files.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ParamsArgs {
    /// Physical parameter file (JSON or TOML); defaults to $FTQC_BUDGET_PARAMS.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Ignore unknown fields in counts and parameter files.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Logical-counts JSON or OpenQASM file.
    #[arg(long)]
    counts: PathBuf,
    #[arg(long)]
    budget_total: f64,
    /// Budget split `L,TS,R`, normalized to the total; uniform when omitted.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long, default_value = "spacetime")]
    metric: CostMetric,
    #[command(flatten)]
    params: ParamsArgs,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    budget_total: f64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct AccumulateArgs {
    /// Directory of `.json`/`.qasm` circuits, or a single circuit file.
    #[arg(long)]
    circuits: PathBuf,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    budget_total: f64,
    #[arg(long, default_value = "spacetime")]
    metric: CostMetric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    params: ParamsArgs,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    trees: u32,
    #[arg(long, default_value_t = 12)]
    max_depth: u32,
    #[arg(long, default_value_t = 2)]
    min_leaf: u32,
    #[arg(long, default_value_t = 4)]
    features_per_split: u32,
    /// Train every tree on the full dataset instead of a bootstrap resample.
    #[arg(long)]
    no_bootstrap: bool,
}

impl ForestArgs {
    fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            bootstrap: !self.no_bootstrap,
            features_per_split: self.features_per_split,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train only on the train side of the seeded split with this ratio.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Model file; written first when `--retrain` is given.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Train on the train side of the split before evaluating.
    #[arg(long)]
    retrain: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    params: ParamsArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Output directory for CSV, output file for JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "small")]
    class: SizeClass,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime { module: &'static str, message: String },
}

impl CliError {
    fn runtime(module: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Runtime {
            module,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Accumulate(a) => cmd_accumulate(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime { module, message }) => {
            eprintln!("error: {module}: {message}");
            1
        }
    }
}

fn check_total(total: f64) -> CliResult {
    if total > 0.0 && total < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--budget-total must lie in (0, 1), got {total}"
        )))
    }
}

fn check_jobs(jobs: usize) -> CliResult {
    if jobs == 0 {
        Err(CliError::Usage("--jobs must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn load_params(args: &ParamsArgs) -> Result<PhysicalParams, CliError> {
    let path = args
        .params
        .clone()
        .or_else(|| std::env::var_os(PARAMS_ENV).map(PathBuf::from));
    match path {
        Some(p) => PhysicalParams::load(&p, args.lenient).map_err(|e| CliError::runtime("estimator", e)),
        None => Ok(PhysicalParams::default()),
    }
}

/// Reads one circuit: `.qasm` files are parsed, anything else is read as
/// logical-counts JSON.
fn load_circuit(path: &Path, lenient: bool) -> Result<LogicalCounts, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime("circuit", format!("cannot read {}: {e}", path.display())))?;
    let with_path = |e: &dyn std::fmt::Display| CliError::runtime("circuit", format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("qasm")) {
        let gates = parse_qasm(&text).map_err(|e| with_path(&e))?;
        Ok(derive_logical_counts(&gates))
    } else {
        load_logical_counts(&text, lenient).map_err(|e| with_path(&e))
    }
}

fn circuit_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_circuits(path: &Path, lenient: bool) -> Result<Vec<(String, LogicalCounts)>, CliError> {
    if !path.is_dir() {
        return Ok(vec![(circuit_id(path), load_circuit(path, lenient)?)]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| CliError::runtime("circuit", format!("cannot list {}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("json") || e.eq_ignore_ascii_case("qasm"))
        })
        .collect();
    files.sort();
    let mut out: Vec<(String, LogicalCounts)> = Vec::with_capacity(files.len());
    for f in &files {
        let id = circuit_id(f);
        if out.iter().any(|(existing, _)| *existing == id) {
            return Err(CliError::runtime("circuit", format!("duplicate circuit id `{id}`")));
        }
        out.push((id, load_circuit(f, lenient)?));
    }
    if out.is_empty() {
        return Err(CliError::runtime(
            "circuit",
            format!("no .json or .qasm circuits in {}", path.display()),
        ));
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &[u8], module: &'static str) -> CliResult {
    fs::write(path, contents).map_err(|e| CliError::runtime(module, format!("cannot write {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::runtime("cli", e))
}

/// Runs `f` on a pool of `jobs` threads.
fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::runtime("cli", e))?;
    Ok(pool.install(f))
}

#[derive(Serialize)]
struct EstimateOutput {
    budget: BudgetDistribution,
    metric: CostMetric,
    cost: f64,
    #[serde(flatten)]
    estimate: ResourceEstimate,
}

fn parse_budget_triple(text: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--budget expects three numbers `L,TS,R`, got `{text}`")))?;
    <[f64; 3]>::try_from(parts)
        .map_err(|_| CliError::Usage(format!("--budget expects three numbers `L,TS,R`, got `{text}`")))
}

fn cmd_estimate(a: EstimateArgs) -> CliResult {
    check_total(a.budget_total)?;
    let params = load_params(&a.params)?;
    let counts = load_circuit(&a.counts, a.params.lenient)?;
    let budget = match &a.budget {
        Some(text) => {
            normalize(parse_budget_triple(text)?, a.budget_total).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => uniform_distribution(a.budget_total).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    let e = estimate(&counts, &budget, &params).map_err(|e| CliError::runtime("estimator", e))?;
    print_json(&EstimateOutput {
        budget,
        metric: a.metric,
        cost: a.metric.cost(&e),
        estimate: e,
    })
}

fn cmd_sample(a: SampleArgs) -> CliResult {
    check_total(a.budget_total)?;
    let mut rng = task_rng(a.seed, 0);
    let mut out = std::io::stdout().lock();
    for _ in 0..a.n {
        let b = sample_distribution(&mut rng, a.budget_total).map_err(|e| CliError::runtime("sampler", e))?;
        let line = jsonl::to_line(&b).expect("distribution serializes");
        writeln!(out, "{line}").map_err(|e| CliError::runtime("cli", e))?;
    }
    Ok(())
}

fn cmd_accumulate(a: AccumulateArgs) -> CliResult {
    check_total(a.budget_total)?;
    check_jobs(a.jobs)?;
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let params = load_params(&a.params)?;
    let circuits = load_circuits(&a.circuits, a.params.lenient)?;
    let cfg = AccumulateConfig {
        n_samples: a.n,
        total_budget: a.budget_total,
        metric: a.metric,
        seed: a.seed,
        params,
        jobs: a.jobs,
    };
    let acc = accumulate(&circuits, &cfg).map_err(|e| CliError::runtime("dataset", e))?;
    let skipped_circuits: Vec<_> = acc.skipped.iter().filter(|s| s.candidate.is_none()).collect();
    for s in &skipped_circuits {
        eprintln!("warning: skipped circuit `{}`: {}: {}", s.circuit_id, s.error, s.detail);
    }
    let skipped_candidates = acc.skipped.len() - skipped_circuits.len();
    if skipped_candidates > 0 {
        eprintln!("warning: {skipped_candidates} infeasible candidate distributions skipped");
    }
    save_dataset(&acc.records, &a.out).map_err(|e| CliError::runtime("dataset", e))?;
    eprintln!("wrote {} records to {}", acc.records.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult {
    check_jobs(a.jobs)?;
    let dataset = load_dataset(&a.dataset).map_err(|e| CliError::runtime("dataset", e))?;
    let train_set = match a.split {
        Some(ratio) => {
            split(&dataset, ratio, a.seed)
                .map_err(|e| CliError::runtime("evaluation", e))?
                .0
        }
        None => dataset,
    };
    let hp = a.forest.hyperparams();
    let model =
        with_pool(a.jobs, || forest::train(&train_set, &hp, a.seed))?.map_err(|e| CliError::runtime("forest", e))?;
    save_model(&model, &a.out).map_err(|e| CliError::runtime("forest", e))?;
    eprintln!(
        "trained {} trees on {} records, wrote {}",
        model.trees.len(),
        model.metadata.n_train,
        a.out.display()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CliResult {
    let model = load_model(&a.model).map_err(|e| CliError::runtime("forest", e))?;
    let counts = load_circuit(&a.counts, a.lenient)?;
    print_json(&model.predict(&counts))
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult {
    check_jobs(a.jobs)?;
    let params = load_params(&a.params)?;
    let dataset = load_dataset(&a.dataset).map_err(|e| CliError::runtime("dataset", e))?;
    let (train_set, test_set) = split(&dataset, a.split, a.seed).map_err(|e| CliError::runtime("evaluation", e))?;
    let model = if a.retrain {
        let hp = a.forest.hyperparams();
        let model = with_pool(a.jobs, || forest::train(&train_set, &hp, a.seed))?
            .map_err(|e| CliError::runtime("forest", e))?;
        save_model(&model, &a.model).map_err(|e| CliError::runtime("forest", e))?;
        model
    } else {
        load_model(&a.model).map_err(|e| CliError::runtime("forest", e))?
    };
    let report = evaluation::evaluate_with_jobs(&model, &test_set, &params, a.jobs)
        .map_err(|e| CliError::runtime("evaluation", e))?
        .with_split(a.seed, a.split);
    export_report(&report, &a.out, ReportFormat::Json).map_err(|e| CliError::runtime("evaluation", e))?;
    let agg = &report.aggregates;
    eprintln!(
        "evaluated {} test circuits: {:.1}% improved, mean improvement {:.2}%, max {:.2}%, {} fallbacks",
        agg.n_rows,
        100.0 * agg.fraction_improved,
        100.0 * agg.mean_improvement,
        100.0 * agg.max_improvement,
        agg.fallback_count
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let report = load_report(&a.input).map_err(|e| CliError::runtime("evaluation", e))?;
    export_report(&report, &a.out, a.format).map_err(|e| CliError::runtime("evaluation", e))
}

fn cmd_synth(a: SynthArgs) -> CliResult {
    fs::create_dir_all(&a.out)
        .map_err(|e| CliError::runtime("circuit", format!("cannot create {}: {e}", a.out.display())))?;
    for i in 0..a.n {
        let counts = generate_synthetic_circuit(derive_seed(a.seed, i), a.class);
        let path = a.out.join(format!("{}_{i:05}.json", a.class));
        let mut text = save_logical_counts(&counts);
        text.push('\n');
        write_file(&path, text.as_bytes(), "circuit")?;
    }
    eprintln!("wrote {} {} circuits to {}", a.n, a.class, a.out.display());
    Ok(())
}
