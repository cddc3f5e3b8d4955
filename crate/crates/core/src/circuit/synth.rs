use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LogicalCounts;

/// Size class of a synthetic circuit, selecting the qubit range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    /// Inclusive qubit range.
    pub fn qubit_range(self) -> (u64, u64) {
        match self {
            SizeClass::Small => (2, 50),
            SizeClass::Medium => (50, 500),
            SizeClass::Large => (500, 5000),
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        })
    }
}

impl FromStr for SizeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(SizeClass::Small),
            "medium" => Ok(SizeClass::Medium),
            "large" => Ok(SizeClass::Large),
            other => Err(format!("unknown size class `{other}` (small|medium|large)")),
        }
    }
}

/// Upper bounds of the log-uniform tallies for a circuit with `qubits` qubits:
/// `(t_count, rotation_count, toffoli_count, measurement_count)`.
pub(crate) fn tally_bounds(qubits: u64) -> (u64, u64, u64, u64) {
    let q2 = qubits * qubits;
    (10 * q2, 2 * q2, q2, 10 * q2)
}

/// Integer draw on `[0, upper]` whose shifted value `x + 1` is log-uniform:
/// `x = floor(exp(u * ln(upper + 2))) - 1` with `u ~ U[0, 1)`, so
/// `P(x <= k) = ln(k + 2) / ln(upper + 2)`.
pub(crate) fn log_uniform_count<R: Rng + ?Sized>(rng: &mut R, upper: u64) -> u64 {
    let span = ((upper + 2) as f64).ln();
    let u: f64 = rng.random();
    let x = (u * span).exp().floor() as u64;
    x.saturating_sub(1).min(upper)
}

/// Deterministic synthetic circuit for the given seed and size class.
pub fn generate_synthetic_circuit(rng_seed: u64, size_class: SizeClass) -> LogicalCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (lo, hi) = size_class.qubit_range();
    let qubits = rng.random_range(lo..=hi);
    let (t_hi, rot_hi, tof_hi, meas_hi) = tally_bounds(qubits);
    let t_count = log_uniform_count(&mut rng, t_hi);
    let rotation_count = log_uniform_count(&mut rng, rot_hi);
    let toffoli_count = log_uniform_count(&mut rng, tof_hi);
    let measurement_count = log_uniform_count(&mut rng, meas_hi);
    let rotation_depth = if rotation_count == 0 {
        0
    } else {
        let min_depth = rotation_count.div_ceil(qubits).max(1);
        rng.random_range(min_depth..=rotation_count)
    };
    LogicalCounts {
        qubits,
        t_count,
        rotation_count,
        rotation_depth,
        toffoli_count,
        measurement_count,
    }
}
