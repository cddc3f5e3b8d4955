use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ftqc_budget::evaluation::{load_report, CSV_ROWS};
use ftqc_budget::sampler::BudgetDistribution;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ftqc-budget"));
    cmd.env_remove("FTQC_BUDGET_PARAMS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

fn ok(out: &Output) -> &Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&ok(out).stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn estimate_cost_falls_as_the_budget_loosens() {
    let cost = |total: &str| {
        json(&run(&[
            "estimate",
            "--counts",
            &fixture("three_qubit_rx.qasm"),
            "--budget-total",
            total,
        ]))["space_time_cost"]
            .as_f64()
            .unwrap()
    };
    assert!(cost("0.1") < cost("0.001"));
    let from_json = json(&run(&[
        "estimate",
        "--counts",
        &fixture("three_qubit_rx.json"),
        "--budget-total",
        "0.1",
    ]));
    assert_eq!(from_json["space_time_cost"].as_f64().unwrap(), cost("0.1"));
    assert_eq!(from_json["metric"], "spacetime");
}

#[test]
fn estimate_respects_budget_split_and_params() {
    let split = json(&run(&[
        "estimate",
        "--counts",
        &fixture("three_qubit_rx.json"),
        "--budget-total",
        "0.01",
        "--budget",
        "2,1,1",
        "--metric",
        "qubits",
    ]));
    assert!((split["budget"]["logical"].as_f64().unwrap() - 0.005).abs() < 1e-15);
    assert_eq!(
        split["cost"].as_f64().unwrap(),
        split["physical_qubits"].as_f64().unwrap()
    );

    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.toml");
    fs::write(&params, "t_phys = 1e-6\n").unwrap();
    let base = json(&run(&[
        "estimate",
        "--counts",
        &fixture("three_qubit_rx.json"),
        "--budget-total",
        "0.01",
    ]));
    let slow = json(&run(&[
        "estimate",
        "--counts",
        &fixture("three_qubit_rx.json"),
        "--budget-total",
        "0.01",
        "--params",
        p(&params),
    ]));
    let ratio = slow["runtime_seconds"].as_f64().unwrap() / base["runtime_seconds"].as_f64().unwrap();
    assert!((ratio - 10.0).abs() < 1e-9);
    let via_env = bin()
        .args([
            "estimate",
            "--counts",
            &fixture("three_qubit_rx.json"),
            "--budget-total",
            "0.01",
        ])
        .env("FTQC_BUDGET_PARAMS", &params)
        .output()
        .unwrap();
    assert_eq!(json(&via_env)["runtime_seconds"], slow["runtime_seconds"]);

    fs::write(&params, "t_phys = 1e-6\nbogus = 1\n").unwrap();
    let strict = run(&[
        "estimate",
        "--counts",
        &fixture("three_qubit_rx.json"),
        "--budget-total",
        "0.01",
        "--params",
        p(&params),
    ]);
    assert_eq!(strict.status.code(), Some(1));
    ok(&run(&[
        "estimate",
        "--counts",
        &fixture("three_qubit_rx.json"),
        "--budget-total",
        "0.01",
        "--params",
        p(&params),
        "--lenient",
    ]));
}

#[test]
fn sample_is_reproducible_json_lines() {
    let a = ok(&run(&["sample", "--budget-total", "0.01", "--n", "3", "--seed", "7"]))
        .stdout
        .clone();
    let b = ok(&run(&["sample", "--budget-total", "0.01", "--n", "3", "--seed", "7"]))
        .stdout
        .clone();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let d: BudgetDistribution = serde_json::from_str(line).unwrap();
        d.validate().unwrap();
    }
}

#[test]
fn exit_codes() {
    let usage = run(&["sample", "--budget-total", "2", "--n", "1"]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(!usage.stderr.is_empty());
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let missing = run(&["estimate", "--counts", "/nonexistent/c.json", "--budget-total", "0.01"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: circuit:"));
    assert!(missing.stdout.is_empty());

    let bad_gate = run(&[
        "estimate",
        "--counts",
        &fixture("unsupported_gate.qasm"),
        "--budget-total",
        "0.01",
    ]);
    assert_eq!(bad_gate.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_gate.stderr).contains("line 5"));
}

#[test]
fn full_chain_produces_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let circuits = d.join("circuits");
    for (class, seed) in [("small", "1"), ("medium", "2"), ("large", "3")] {
        ok(&run(&[
            "synth",
            "--n",
            "6",
            "--seed",
            seed,
            "--class",
            class,
            "--out",
            p(&circuits),
        ]));
    }
    fs::copy(fixture("three_qubit_rx.qasm"), circuits.join("three_qubit_rx.qasm")).unwrap();
    assert_eq!(fs::read_dir(&circuits).unwrap().count(), 19);

    let dataset = d.join("dataset.jsonl");
    ok(&run(&[
        "accumulate",
        "--circuits",
        p(&circuits),
        "--n",
        "30",
        "--budget-total",
        "0.01",
        "--metric",
        "spacetime",
        "--seed",
        "4",
        "--out",
        p(&dataset),
        "--jobs",
        "2",
    ]));
    assert_eq!(fs::read_to_string(&dataset).unwrap().lines().count(), 19);

    let model = d.join("model.bin");
    ok(&run(&[
        "train",
        "--dataset",
        p(&dataset),
        "--out",
        p(&model),
        "--seed",
        "4",
        "--trees",
        "20",
        "--split",
        "0.75",
    ]));
    let pred: BudgetDistribution = serde_json::from_value(json(&run(&[
        "predict",
        "--model",
        p(&model),
        "--counts",
        &fixture("three_qubit_rx.qasm"),
    ])))
    .unwrap();
    pred.validate().unwrap();

    let report = d.join("report.json");
    ok(&run(&[
        "evaluate",
        "--model",
        p(&model),
        "--dataset",
        p(&dataset),
        "--split",
        "0.75",
        "--seed",
        "4",
        "--out",
        p(&report),
    ]));
    let r = load_report(&report).unwrap();
    assert_eq!(r.rows.len(), 5);
    assert!(r.rows.iter().all(|row| row.improvement_fraction >= 0.0));

    // --retrain on the same split and seed reproduces the model trained above
    let retrained = d.join("retrained.bin");
    let report2 = d.join("report2.json");
    ok(&run(&[
        "evaluate",
        "--model",
        p(&retrained),
        "--dataset",
        p(&dataset),
        "--split",
        "0.75",
        "--seed",
        "4",
        "--out",
        p(&report2),
        "--retrain",
        "--trees",
        "20",
    ]));
    assert_eq!(fs::read(&model).unwrap(), fs::read(&retrained).unwrap());
    assert_eq!(fs::read(&report).unwrap(), fs::read(&report2).unwrap());

    let csv = d.join("csv");
    ok(&run(&[
        "report",
        "--in",
        p(&report),
        "--format",
        "csv",
        "--out",
        p(&csv),
    ]));
    assert_eq!(fs::read_to_string(csv.join(CSV_ROWS)).unwrap().lines().count(), 6);
    let again = d.join("again.json");
    ok(&run(&[
        "report",
        "--in",
        p(&report),
        "--format",
        "json",
        "--out",
        p(&again),
    ]));
    assert_eq!(fs::read(&report).unwrap(), fs::read(&again).unwrap());
}
