//! Train a random forest on an accumulated dataset, round-trip it through the
//! binary model format and inspect a prediction with its tree spread.
//!
//! ```bash
//! cargo run --release -p ftqc-budget --example train_forest
//! ```

use ftqc_budget::circuit::{generate_synthetic_circuit, SizeClass};
use ftqc_budget::dataset::{accumulate, AccumulateConfig, CostMetric};
use ftqc_budget::forest::{load_model, save_model, train, Hyperparams};
use ftqc_budget::sampler::derive_seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let circuits: Vec<_> = (0..45u64)
        .map(|i| {
            let class = SizeClass::ALL[i as usize % 3];
            (format!("c{i}"), generate_synthetic_circuit(derive_seed(3, i), class))
        })
        .collect();
    let dataset = accumulate(&circuits, &AccumulateConfig::new(100, 0.01, CostMetric::SpaceTime, 3))?.records;

    let hp = Hyperparams {
        n_trees: 50,
        ..Hyperparams::default()
    };
    let model = train(&dataset, &hp, 3)?;
    let depth = model.trees.iter().map(|t| t.depth()).max().unwrap_or(0);
    println!("{} trees, max depth {depth}", model.trees.len());

    let path = std::env::temp_dir().join("ftqc-budget-example-model.bin");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    assert_eq!(loaded, model);
    println!(
        "model round-tripped through {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let probe = generate_synthetic_circuit(derive_seed(99, 0), SizeClass::Medium);
    let d = loaded.predict_detailed(&probe);
    println!("probe counts {:?}", probe.as_array());
    println!("predicted fractions {:?}", d.distribution.fractions());
    println!("tree std dev        {:?}", d.tree_variance.map(f64::sqrt));
    Ok(())
}
