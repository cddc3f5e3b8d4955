//! Circuit ingestion: OpenQASM 2.0 subset parsing, logical-counts JSON and a
//! synthetic circuit generator.
//!
//! Every circuit is eventually reduced to a [`LogicalCounts`] record, the six
//! tallies consumed both by the resource estimator and by the forest features.

mod counts;
mod qasm;
mod synth;

pub use counts::{load_logical_counts, save_logical_counts, CountsError, LogicalCounts};
pub use qasm::{derive_logical_counts, parse_qasm, Gate, GateCounts, ParseError};
pub use synth::{generate_synthetic_circuit, SizeClass};

/// Absolute tolerance used when deciding whether a rotation angle is a
/// multiple of pi/2 (and therefore a Clifford operation).
pub const CLIFFORD_ANGLE_TOLERANCE: f64 = 1e-12;

/// Returns true when `angle` is an integer multiple of pi/2 within
/// [`CLIFFORD_ANGLE_TOLERANCE`].
pub fn is_clifford_angle(angle: f64) -> bool {
    let quarter = std::f64::consts::FRAC_PI_2;
    let r = angle.rem_euclid(quarter);
    r <= CLIFFORD_ANGLE_TOLERANCE || quarter - r <= CLIFFORD_ANGLE_TOLERANCE
}
