//! Evaluate a model against the uniform distribution and export the report
//! as JSON and as a CSV bundle.
//!
//! ```bash
//! cargo run --release -p ftqc-budget --example export_report -- report-out
//! ```

use std::path::PathBuf;

use ftqc_budget::circuit::{generate_synthetic_circuit, SizeClass};
use ftqc_budget::dataset::{accumulate, AccumulateConfig, CostMetric};
use ftqc_budget::evaluation::{export_report, run_protocol, ReportFormat};
use ftqc_budget::forest::Hyperparams;
use ftqc_budget::sampler::derive_seed;
use ftqc_budget::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "report-out".into()));
    let circuits: Vec<_> = (0..40u64)
        .map(|i| {
            let class = SizeClass::ALL[i as usize % 3];
            (format!("c{i:02}"), generate_synthetic_circuit(derive_seed(8, i), class))
        })
        .collect();
    let dataset = accumulate(&circuits, &AccumulateConfig::new(100, 0.01, CostMetric::SpaceTime, 8))?.records;
    let (_, report) = run_protocol(
        &dataset,
        0.75,
        8,
        &Hyperparams::default(),
        &PhysicalParams::default(),
        1,
    )?;

    std::fs::create_dir_all(&out)?;
    export_report(&report, &out.join("report.json"), ReportFormat::Json)?;
    export_report(&report, &out.join("csv"), ReportFormat::Csv)?;

    let h = &report.histograms.improvement;
    println!("improvement histogram ({} rows):", h.total());
    for ((lo, hi), n) in h.edges().zip(&h.counts).filter(|(_, &n)| n > 0) {
        println!(
            "  {:>5.1}% - {:>5.1}%  {}",
            lo * 100.0,
            hi * 100.0,
            "#".repeat(*n as usize)
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
