//! Resource estimates for the three-qubit example circuit at total budgets of
//! 0.1%, 1% and 10%, first split uniformly and then skewed.
//!
//! ```bash
//! cargo run -p ftqc-budget --example estimate_budget_trend
//! ```

use ftqc_budget::estimator::{estimate, PhysicalParams};
use ftqc_budget::sampler::{normalize, uniform_distribution};
use ftqc_budget::LogicalCounts;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let circuit = LogicalCounts {
        rotation_count: 5,
        rotation_depth: 3,
        measurement_count: 3,
        ..LogicalCounts::with_qubits(3)
    };
    let params = PhysicalParams::default();

    println!(
        "{:>7} {:>9} {:>3} {:>12} {:>12} {:>10}",
        "total", "split", "d", "qubits", "runtime ms", "cost"
    );
    for total in [0.001, 0.01, 0.1] {
        for (label, budget) in [
            ("uniform", uniform_distribution(total)?),
            ("skewed", normalize([0.1, 0.1, 0.8], total)?),
        ] {
            let e = estimate(&circuit, &budget, &params)?;
            println!(
                "{:>6}% {:>9} {:>3} {:>12} {:>12.4} {:>10.3e}",
                total * 100.0,
                label,
                e.code_distance,
                e.physical_qubits,
                e.runtime_seconds * 1e3,
                e.space_time_cost
            );
        }
    }
    Ok(())
}
