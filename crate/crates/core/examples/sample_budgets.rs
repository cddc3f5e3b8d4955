//! Random error-budget distributions on the simplex, with the per-component
//! mean converging to a third of the total.
//!
//! ```bash
//! cargo run -p ftqc-budget --example sample_budgets
//! ```

use ftqc_budget::sampler::{normalize, sample_distribution, task_rng, uniform_distribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let total = 0.01;
    let mut rng = task_rng(7, 0);
    for _ in 0..5 {
        let b = sample_distribution(&mut rng, total)?;
        let [l, t, r] = b.fractions();
        println!("logical {l:.3}  t_states {t:.3}  rotations {r:.3}");
    }

    let n = 100_000;
    let mut mean = [0.0; 3];
    for _ in 0..n {
        let c = sample_distribution(&mut rng, total)?.components();
        for k in 0..3 {
            mean[k] += c[k] / f64::from(n);
        }
    }
    println!("mean over {n} draws: {mean:?} (total/3 = {:e})", total / 3.0);
    println!("uniform:        {:?}", uniform_distribution(total)?.components());
    // a zero component is lifted to the floor so every budget stays positive
    println!(
        "normalize(1,0,1): {:?}",
        normalize([1.0, 0.0, 1.0], total)?.components()
    );
    Ok(())
}
