//! Parse an OpenQASM 2.0 file into gate tallies and logical counts.
//!
//! ```bash
//! cargo run -p ftqc-budget --example parse_qasm -- crates/core/tests/fixtures/mixed.qasm
//! ```
//! Without an argument the three-qubit example circuit is parsed.

use ftqc_budget::circuit::{derive_logical_counts, parse_qasm, save_logical_counts, Gate};

const THREE_QUBITS: &str = "\
OPENQASM 2.0;
qreg q[3];
creg c[3];
rx(0.3) q[0];
rx(0.35) q[1]; cx q[0],q[1]; rx(-0.35) q[1]; cx q[0],q[1];
rx(0.6) q[2]; cx q[1],q[2]; rx(-0.6) q[2]; cx q[1],q[2];
measure q[0] -> c[0];
measure q[1] -> c[1];
measure q[2] -> c[2];
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => THREE_QUBITS.to_string(),
    };
    let gates = parse_qasm(&source)?;
    println!(
        "qubits {}  rotation layers {}",
        gates.qubit_count, gates.rotation_layer_count
    );
    for gate in Gate::ALL {
        let n = gates.count(gate);
        if n > 0 {
            println!("  {:<8}{n}", gate.mnemonic());
        }
    }
    let counts = derive_logical_counts(&gates);
    println!("logical counts: {}", save_logical_counts(&counts));
    Ok(())
}
