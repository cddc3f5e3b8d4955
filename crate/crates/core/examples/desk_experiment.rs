//! End-to-end experiment at desk scale: synthetic circuits, dataset
//! accumulation, forest training on a 75/25 split and evaluation against the
//! uniform distribution.
//!
//! ```bash
//! cargo run --release -p ftqc-budget --example desk_experiment
//! ```

use ftqc_budget::circuit::{generate_synthetic_circuit, SizeClass};
use ftqc_budget::dataset::{accumulate, AccumulateConfig, CostMetric};
use ftqc_budget::evaluation::run_protocol;
use ftqc_budget::forest::Hyperparams;
use ftqc_budget::sampler::derive_seed;
use ftqc_budget::PhysicalParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = 2024;
    let circuits: Vec<_> = (0..60u64)
        .map(|i| {
            let class = SizeClass::ALL[i as usize % 3];
            (
                format!("synth_{class}_{i:04}"),
                generate_synthetic_circuit(derive_seed(seed, i), class),
            )
        })
        .collect();

    let cfg = AccumulateConfig::new(200, 0.01, CostMetric::SpaceTime, seed);
    let acc = accumulate(&circuits, &cfg)?;
    println!(
        "accumulated {} records ({} skipped candidates)",
        acc.records.len(),
        acc.skipped.len()
    );

    let (model, report) = run_protocol(
        &acc.records,
        0.75,
        seed,
        &Hyperparams::default(),
        &PhysicalParams::default(),
        1,
    )?;
    let a = &report.aggregates;
    println!(
        "trained {} trees on {} records",
        model.trees.len(),
        model.metadata.n_train
    );
    println!("test rows           {}", a.n_rows);
    println!("fraction improved   {:.3}", a.fraction_improved);
    println!("mean improvement    {:.2}%", 100.0 * a.mean_improvement);
    println!("max improvement     {:.2}%", 100.0 * a.max_improvement);
    println!(
        "mean predicted split  logical {:.3}  t_states {:.3}  rotations {:.3}",
        a.mean_logical_fraction, a.mean_tstates_fraction, a.mean_rotations_fraction
    );
    let l = &report.label_statistics;
    println!(
        "mean best-found split logical {:.3}  t_states {:.3}  rotations {:.3}",
        l.mean_logical_fraction, l.mean_tstates_fraction, l.mean_rotations_fraction
    );
    Ok(())
}
