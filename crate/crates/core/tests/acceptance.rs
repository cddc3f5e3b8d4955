//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any criterion fails.
//!
//! ```bash
//! cargo test --release -p ftqc-budget --test acceptance
//! ```

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ftqc_budget::circuit::generate_synthetic_circuit;
use ftqc_budget::circuit::{derive_logical_counts, parse_qasm, Gate, GateCounts, LogicalCounts, ParseError, SizeClass};
use ftqc_budget::dataset::{accumulate, load_dataset, AccumulateConfig, CostMetric, DatasetRecord};
use ftqc_budget::estimator::{estimate, PhysicalParams, ResourceEstimate};
use ftqc_budget::evaluation::load_report;
use ftqc_budget::forest::{train, Hyperparams};
use ftqc_budget::sampler::{
    derive_seed, floor, normalize, sample_distribution, task_rng, uniform_distribution, BudgetDistribution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect()
}

fn three_qubit_counts() -> LogicalCounts {
    derive_logical_counts(&parse_qasm(&fs::read_to_string(fixture("three_qubit_rx.qasm")).unwrap()).unwrap())
}

fn synthetic(seed: u64, n: u64) -> Vec<LogicalCounts> {
    (0..n)
        .map(|i| generate_synthetic_circuit(derive_seed(seed, i), SizeClass::ALL[i as usize % 3]))
        .collect()
}

// ---------------------------------------------------------------------------

fn sampler_simplex() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let mut worst_z: f64 = 0.0;
    for (i, total) in [0.001, 0.01, 0.1].into_iter().enumerate() {
        let mut rng = task_rng(1, i as u64);
        let mut sum = [0.0; 3];
        let mut sum_sq = [0.0; 3];
        for _ in 0..n {
            let b = sample_distribution(&mut rng, total).map_err(|e| e.to_string())?;
            let c = b.components();
            let s: f64 = c.iter().sum();
            check((s - total).abs() <= 1e-9 * total, || {
                format!("sum {s} at total {total}")
            })?;
            check(c.iter().all(|&x| x >= floor(total)), || format!("{c:?} below floor"))?;
            for k in 0..3 {
                sum[k] += c[k];
                sum_sq[k] += c[k] * c[k];
            }
        }
        for k in 0..3 {
            let mean = sum[k] / n as f64;
            let var = sum_sq[k] / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            let z = (mean - total / 3.0).abs() / se;
            worst_z = worst_z.max(z);
            check(z <= 3.0, || {
                format!("total {total} component {k}: mean off by {z:.2} SE")
            })?;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("3x1e5 draws, worst |z| = {worst_z:.2}, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

/// Quantities that must not increase when `component` grows.
fn governed(component: usize, e: &ResourceEstimate) -> Vec<(&'static str, f64)> {
    match component {
        0 => vec![
            ("code_distance", f64::from(e.code_distance)),
            ("tile_qubits", e.tile_qubits() as f64),
            ("runtime", e.runtime_seconds),
        ],
        1 => vec![
            ("factory_rounds", f64::from(e.factory_design.rounds)),
            (
                "qubits_per_factory",
                e.factory_design.physical_qubits_per_factory as f64,
            ),
            ("seconds_per_tstate", e.factory_design.seconds_per_tstate),
            ("physical_qubits", e.physical_qubits as f64),
        ],
        _ => vec![
            ("t_per_rotation", e.t_per_rotation as f64),
            ("total_t_states", e.total_t_states as f64),
            ("logical_cycles", e.logical_cycles as f64),
            ("code_distance", f64::from(e.code_distance)),
            ("runtime", e.runtime_seconds),
        ],
    }
}

fn monotonicity_grid() -> Outcome {
    let p = PhysicalParams::default();
    let mut checked = 0;
    for (ci, c) in synthetic(2, 10).iter().enumerate() {
        for total in [0.001, 0.01, 0.1] {
            for component in 0..3 {
                let mut previous: Option<Vec<(&str, f64)>> = None;
                for step in 0..20 {
                    // 20 values from total/300 to total*3 (others fixed at total/3)
                    let v = total / 300.0 * 10f64.powf(3.0 * f64::from(step) / 19.0);
                    let mut comps = [total / 3.0; 3];
                    comps[component] = v;
                    let b =
                        BudgetDistribution::from_components(comps[0], comps[1], comps[2]).map_err(|e| e.to_string())?;
                    match estimate(c, &b, &p) {
                        Ok(e) => {
                            let now = governed(component, &e);
                            if let Some(prev) = &previous {
                                for ((name, before), (_, after)) in prev.iter().zip(&now) {
                                    check(after <= before, || {
                                        format!("circuit {ci} total {total} component {component}: {name} rose {before} -> {after}")
                                    })?;
                                }
                            }
                            checked += 1;
                            previous = Some(now);
                        }
                        Err(e) => check(previous.is_none(), || {
                            format!("circuit {ci} total {total}: became infeasible at larger budget: {e}")
                        })?,
                    }
                }
            }
        }
    }
    Ok(format!("{checked} feasible grid points, zero violations"))
}

// ---------------------------------------------------------------------------

fn error_accounting() -> Outcome {
    let p = PhysicalParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut feasible = 0;
    for i in 0..10_000u64 {
        let c = generate_synthetic_circuit(derive_seed(3, i), SizeClass::ALL[i as usize % 3]);
        let total = 10f64.powf(rng.random_range(-4.0..-0.5));
        let b = sample_distribution(&mut rng, total).map_err(|e| e.to_string())?;
        if let Ok(e) = estimate(&c, &b, &p) {
            let spent = e.achieved_logical_error + e.achieved_tstate_error + e.achieved_rotation_error;
            check(spent <= b.total, || {
                format!("pair {i}: spent {spent:e} > total {:e}", b.total)
            })?;
            feasible += 1;
        }
    }
    check(feasible > 5_000, || format!("only {feasible} feasible pairs"))?;
    Ok(format!("{feasible} of 10000 pairs feasible, all within budget"))
}

// ---------------------------------------------------------------------------

fn budget_trend() -> Outcome {
    let c = three_qubit_counts();
    let p = PhysicalParams::default();
    let cost = |total: f64| -> Result<f64, String> {
        let b = uniform_distribution(total).map_err(|e| e.to_string())?;
        estimate(&c, &b, &p)
            .map(|e| e.space_time_cost)
            .map_err(|e| e.to_string())
    };
    let (a, b, z) = (cost(0.001)?, cost(0.01)?, cost(0.1)?);
    check(a > b && b > z, || {
        format!("costs {a:e}, {b:e}, {z:e} not strictly decreasing")
    })?;
    Ok(format!("space-time {a:.3e} > {b:.3e} > {z:.3e} qubit-seconds"))
}

// ---------------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let p = PhysicalParams::default();
    let total = 0.01;
    let circuits: Vec<_> = (0..5u64)
        .map(|i| {
            (
                format!("small_{i}"),
                generate_synthetic_circuit(derive_seed(5, i), SizeClass::Small),
            )
        })
        .collect();
    let cfg = AccumulateConfig::new(1000, total, CostMetric::SpaceTime, 5);
    let records = accumulate(&circuits, &cfg).map_err(|e| e.to_string())?.records;
    check(records.len() == 5, || format!("{} records", records.len()))?;
    let mut worst: f64 = 0.0;
    for (r, (_, c)) in records.iter().zip(&circuits) {
        let mut grid_min = f64::INFINITY;
        for i in 0..=20 {
            for j in 0..=(20 - i) {
                let raw = [f64::from(i), f64::from(j), f64::from(20 - i - j)];
                let Ok(b) = normalize(raw, total) else { continue };
                if let Ok(e) = estimate(c, &b, &p) {
                    grid_min = grid_min.min(e.space_time_cost);
                }
            }
        }
        let ratio = r.best_cost / grid_min;
        worst = worst.max(ratio);
        check(ratio <= 1.05, || {
            format!("{}: best {:e} vs grid {grid_min:e}", r.circuit_id, r.best_cost)
        })?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("worst best/grid ratio {worst:.4}, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------

fn forest_correctness() -> Outcome {
    let mse = |pred: &[[f64; 3]], truth: &[[f64; 3]]| {
        pred.iter()
            .zip(truth)
            .map(|(p, t)| (0..3).map(|k| (p[k] - t[k]).powi(2)).sum::<f64>())
            .sum::<f64>()
            / pred.len() as f64
    };
    let p = PhysicalParams::default();
    let datasets: Vec<Vec<DatasetRecord>> = [(6u64, 30u64), (7, 45), (8, 60)]
        .iter()
        .map(|&(seed, n)| {
            let circuits: Vec<_> = synthetic(seed, n)
                .into_iter()
                .enumerate()
                .map(|(i, c)| (format!("c{i}"), c))
                .collect();
            accumulate(
                &circuits,
                &AccumulateConfig::new(100, 0.01, CostMetric::SpaceTime, seed),
            )
            .map(|a| a.records)
            .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;

    // (a) single tree of depth 0 predicts the mean label of its bootstrap resample
    let data = &datasets[0];
    let hp = Hyperparams {
        n_trees: 1,
        max_depth: 0,
        ..Hyperparams::default()
    };
    let model = train(data, &hp, 12).map_err(|e| e.to_string())?;
    let n = data.len();
    let mut rng = task_rng(12, 0);
    let mut mean = [0.0; 3];
    for _ in 0..n {
        let label = data[rng.random_range(0..n)].best_distribution.components();
        for (m, x) in mean.iter_mut().zip(label) {
            *m += x / n as f64;
        }
    }
    for r in data {
        let raw = model.predict_raw(&r.counts);
        check(
            (0..3).all(|k| (raw[k] - mean[k]).abs() <= 1e-15 * mean[k].max(1e-300) + 1e-18),
            || format!("(a) {raw:?} vs bootstrap mean {mean:?}"),
        )?;
    }

    // (b) memorization of 20 rows
    let rows: Vec<DatasetRecord> = datasets[2].iter().take(20).cloned().collect();
    let hp = Hyperparams {
        n_trees: 1,
        max_depth: u32::MAX,
        min_leaf: 1,
        bootstrap: false,
        ..Hyperparams::default()
    };
    let model = train(&rows, &hp, 0).map_err(|e| e.to_string())?;
    for r in &rows {
        let got = model.predict(&r.counts).components();
        let want = r.best_distribution.components();
        check(
            (0..3).all(|k| (got[k] - want[k]).abs() <= 1e-12 * r.total_budget),
            || format!("(b) {}: {got:?} vs {want:?}", r.circuit_id),
        )?;
    }

    // (c) training MSE at most the mean predictor's, (d) predictions on the simplex
    let mut ratios = Vec::new();
    for data in &datasets {
        let model = train(data, &Hyperparams::default(), 1).map_err(|e| e.to_string())?;
        let truth: Vec<[f64; 3]> = data.iter().map(|r| r.best_distribution.components()).collect();
        let preds: Vec<BudgetDistribution> = data.iter().map(|r| model.predict(&r.counts)).collect();
        for b in &preds {
            b.validate().map_err(|e| format!("(d) {e}"))?;
        }
        let pred: Vec<[f64; 3]> = preds.iter().map(|b| b.components()).collect();
        let mut m = [0.0; 3];
        for t in &truth {
            for k in 0..3 {
                m[k] += t[k] / truth.len() as f64;
            }
        }
        let model_mse = mse(&pred, &truth);
        let base_mse = mse(&vec![m; truth.len()], &truth);
        check(model_mse <= base_mse, || {
            format!("(c) mse {model_mse:e} > baseline {base_mse:e}")
        })?;
        ratios.push(model_mse / base_mse);
        for c in synthetic(40, 1000) {
            model.predict(&c).validate().map_err(|e| format!("(d) {e}"))?;
        }
    }
    let _ = p;
    Ok(format!(
        "(a) (b) exact; (c) mse/baseline {}; (d) 3x{} predictions on simplex",
        ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", "),
        datasets.iter().map(Vec::len).sum::<usize>() + 1000
    ))
}

// ---------------------------------------------------------------------------

const SEED: &str = "2024";

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ftqc-budget"))
        .args(args)
        .env_remove("FTQC_BUDGET_PARAMS")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// The desk-scale experiment through the command line: 20 circuits per size
/// class, 200 samples each at 1%, a 75/25 split, then a CSV report.
fn desk_chain(dir: &Path, jobs: &str) -> Result<(), String> {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let circuits = dir.join("circuits");
    for (class, offset) in [("small", 0u64), ("medium", 1), ("large", 2)] {
        let seed = (SEED.parse::<u64>().unwrap() + offset).to_string();
        cli(&[
            "synth",
            "--n",
            "20",
            "--seed",
            &seed,
            "--class",
            class,
            "--out",
            &s(&circuits),
        ])?;
    }
    let dataset = s(&dir.join("dataset.jsonl"));
    let model = s(&dir.join("model.bin"));
    let report = s(&dir.join("report.json"));
    cli(&[
        "accumulate",
        "--circuits",
        &s(&circuits),
        "--n",
        "200",
        "--budget-total",
        "0.01",
        "--metric",
        "spacetime",
        "--seed",
        SEED,
        "--out",
        &dataset,
        "--jobs",
        jobs,
    ])?;
    cli(&[
        "train",
        "--dataset",
        &dataset,
        "--out",
        &model,
        "--seed",
        SEED,
        "--split",
        "0.75",
        "--jobs",
        jobs,
    ])?;
    cli(&[
        "evaluate",
        "--model",
        &model,
        "--dataset",
        &dataset,
        "--split",
        "0.75",
        "--seed",
        SEED,
        "--out",
        &report,
        "--jobs",
        jobs,
    ])?;
    cli(&[
        "report",
        "--in",
        &report,
        "--format",
        "csv",
        "--out",
        &s(&dir.join("csv")),
    ])
}

fn desk_experiment() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    desk_chain(dir.path(), "1")?;
    let elapsed = start.elapsed();
    let dataset = load_dataset(&dir.path().join("dataset.jsonl")).map_err(|e| e.to_string())?;
    let report = load_report(&dir.path().join("report.json")).map_err(|e| e.to_string())?;
    let a = &report.aggregates;
    let label_improved = dataset.iter().filter(|r| r.best_cost < r.uniform_cost).count();
    let summary = format!(
        "{} records, {} test rows; fraction_improved {:.3} (need >= 0.5); mean_improvement {:.4} (need > 0); \
         min row improvement {:.4} (need >= 0); mean_logical_fraction {:.3} (need < 0.333); \
         labels better than uniform {}/{}; label logical fraction {:.3}; {elapsed:.1?}",
        dataset.len(),
        a.n_rows,
        a.fraction_improved,
        a.mean_improvement,
        report
            .rows
            .iter()
            .map(|r| r.improvement_fraction)
            .fold(f64::INFINITY, f64::min),
        a.mean_logical_fraction,
        label_improved,
        dataset.len(),
        report.label_statistics.mean_logical_fraction,
    );
    let pass = dataset.len() == 60
        && a.fraction_improved >= 0.5
        && a.mean_improvement > 0.0
        && report.rows.iter().all(|r| r.improvement_fraction >= 0.0)
        && a.mean_logical_fraction < 1.0 / 3.0
        && elapsed < Duration::from_secs(180);
    if pass {
        Ok(summary)
    } else {
        Err(summary)
    }
}

// ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [("a", "1"), ("b", "1"), ("c", "4")];
    for (name, jobs) in runs {
        let dir = root.path().join(name);
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        desk_chain(&dir, jobs)?;
    }
    let read = |run: &str, file: &str| fs::read(root.path().join(run).join(file)).map_err(|e| e.to_string());
    for file in ["dataset.jsonl", "model.bin", "report.json", "csv/rows.csv"] {
        check(read("a", file)? == read("b", file)?, || {
            format!("{file} differs between repeats")
        })?;
        check(read("a", file)? == read("c", file)?, || {
            format!("{file} differs between --jobs 1 and --jobs 4")
        })?;
    }
    Ok("dataset, model, report and CSV byte-identical across repeats and --jobs 1/4".into())
}

// ---------------------------------------------------------------------------

fn parser_suite() -> Outcome {
    let read = |name: &str| fs::read_to_string(fixture(name)).map_err(|e| e.to_string());
    let tallies = |g: &GateCounts| -> Vec<(&'static str, u64)> {
        Gate::ALL
            .into_iter()
            .filter(|&x| g.count(x) > 0)
            .map(|x| (x.mnemonic(), g.count(x)))
            .collect()
    };

    let g = parse_qasm(&read("three_qubit_rx.qasm")?).map_err(|e| e.to_string())?;
    check(
        g.qubit_count == 3 && tallies(&g) == [("cx", 4), ("rx", 5), ("measure", 3)],
        || format!("three_qubit_rx: {:?}", tallies(&g)),
    )?;

    let g = parse_qasm(&read("mixed.qasm")?).map_err(|e| e.to_string())?;
    let expected = [
        ("h", 2),
        ("s", 1),
        ("sdg", 1),
        ("x", 1),
        ("y", 1),
        ("z", 1),
        ("cz", 1),
        ("t", 2),
        ("tdg", 1),
        ("rx", 1),
        ("ry", 1),
        ("rz", 4),
        ("ccx", 2),
        ("measure", 2),
    ];
    check(g.qubit_count == 5 && tallies(&g) == expected, || {
        format!("mixed: {:?}", tallies(&g))
    })?;
    let lc = derive_logical_counts(&g);
    check(
        lc.rotation_count == 4 && lc.rotation_depth == 3 && lc.t_count == 3,
        || format!("mixed: {lc:?}"),
    )?;

    let g = parse_qasm(&read("random50.qasm")?).map_err(|e| e.to_string())?;
    check(g.total_gates() == 50, || format!("random50: {} gates", g.total_gates()))?;

    match parse_qasm(&read("unsupported_gate.qasm")?) {
        Err(ParseError::UnsupportedGate { ref name, line: 5 }) if name == "u3" => {}
        other => return Err(format!("unsupported_gate: {other:?}")),
    }
    match parse_qasm(&read("malformed.qasm")?) {
        Err(ParseError::SyntaxError { line: 5, .. }) => {}
        other => return Err(format!("malformed: {other:?}")),
    }
    Ok("3 fixtures parse exactly; UnsupportedGate and SyntaxError at line 5".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 9] = [
        ("sampler simplex", sampler_simplex),
        ("estimator monotonicity", monotonicity_grid),
        ("error accounting", error_accounting),
        ("budget trend on the three-qubit example", budget_trend),
        ("sampling vs simplex grid", oracle_equivalence),
        ("forest correctness", forest_correctness),
        ("desk-scale experiment", desk_experiment),
        ("determinism", determinism),
        ("parser fixtures", parser_suite),
    ];
    // quiet the default hook; panics are reported as failures below
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().unwrap_or_default()
            ))
        });
        match outcome {
            Ok(detail) => println!("criterion {}  PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}  FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
