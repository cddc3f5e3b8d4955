//! Search the best budget distribution for a batch of synthetic circuits and
//! write the dataset as JSON lines.
//!
//! ```bash
//! cargo run --release -p ftqc-budget --example accumulate_dataset -- dataset.jsonl
//! ```

use ftqc_budget::circuit::{generate_synthetic_circuit, SizeClass};
use ftqc_budget::dataset::{accumulate, save_dataset, AccumulateConfig, CostMetric};
use ftqc_budget::sampler::derive_seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "dataset.jsonl".into());
    let circuits: Vec<_> = (0..12u64)
        .map(|i| {
            let class = SizeClass::ALL[i as usize % 3];
            (
                format!("{class}_{i:02}"),
                generate_synthetic_circuit(derive_seed(11, i), class),
            )
        })
        .collect();

    let mut cfg = AccumulateConfig::new(200, 0.01, CostMetric::SpaceTime, 11);
    cfg.jobs = 4;
    let acc = accumulate(&circuits, &cfg)?;
    for r in &acc.records {
        let [l, t, rot] = r.best_distribution.fractions();
        println!(
            "{:<12} saving {:>5.1}%  split {l:.2}/{t:.2}/{rot:.2}",
            r.circuit_id,
            100.0 * (1.0 - r.best_cost / r.uniform_cost)
        );
    }
    println!("{} infeasible candidates skipped", acc.skipped.len());
    save_dataset(&acc.records, out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
