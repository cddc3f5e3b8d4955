use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// The six-tally featurization of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicalCounts {
    pub qubits: u64,
    pub t_count: u64,
    /// Arbitrary-angle rotations only; Clifford-angle rotations are excluded.
    pub rotation_count: u64,
    /// Number of rotation layers.
    pub rotation_depth: u64,
    pub toffoli_count: u64,
    pub measurement_count: u64,
}

pub(crate) const FIELDS: [&str; 6] = [
    "qubits",
    "t_count",
    "rotation_count",
    "rotation_depth",
    "toffoli_count",
    "measurement_count",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountsError {
    #[error("schema error in field `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl LogicalCounts {
    /// Counts with only `qubits` set.
    pub fn with_qubits(qubits: u64) -> Self {
        Self {
            qubits,
            t_count: 0,
            rotation_count: 0,
            rotation_depth: 0,
            toffoli_count: 0,
            measurement_count: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CountsError> {
        if self.qubits < 1 {
            return Err(CountsError::InvariantViolation("qubits must be at least 1".into()));
        }
        if self.rotation_depth > self.rotation_count {
            return Err(CountsError::InvariantViolation(format!(
                "rotation_depth ({}) exceeds rotation_count ({})",
                self.rotation_depth, self.rotation_count
            )));
        }
        if (self.rotation_depth == 0) != (self.rotation_count == 0) {
            return Err(CountsError::InvariantViolation(
                "rotation_depth must be zero exactly when rotation_count is zero".into(),
            ));
        }
        Ok(())
    }

    /// Field values in canonical order (see the JSON schema).
    pub fn as_array(&self) -> [u64; 6] {
        [
            self.qubits,
            self.t_count,
            self.rotation_count,
            self.rotation_depth,
            self.toffoli_count,
            self.measurement_count,
        ]
    }

    pub(crate) fn from_object(obj: &Map<String, Value>, lenient: bool) -> Result<Self, CountsError> {
        if !lenient {
            if let Some(extra) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
                return Err(CountsError::Schema {
                    field: extra.clone(),
                    reason: "unknown field".into(),
                });
            }
        }
        let mut vals = [0u64; 6];
        for (slot, name) in vals.iter_mut().zip(FIELDS) {
            let v = obj.get(name).ok_or_else(|| CountsError::Schema {
                field: name.into(),
                reason: "missing field".into(),
            })?;
            *slot = v.as_u64().ok_or_else(|| CountsError::Schema {
                field: name.into(),
                reason: format!("expected a non-negative integer, found {v}"),
            })?;
        }
        let counts = Self {
            qubits: vals[0],
            t_count: vals[1],
            rotation_count: vals[2],
            rotation_depth: vals[3],
            toffoli_count: vals[4],
            measurement_count: vals[5],
        };
        counts.validate()?;
        Ok(counts)
    }
}

/// Parses a logical-counts JSON object. In strict mode unknown fields are
/// rejected; with `lenient` they are ignored.
pub fn load_logical_counts(json_text: &str, lenient: bool) -> Result<LogicalCounts, CountsError> {
    let value: Value = serde_json::from_str(json_text).map_err(|e| CountsError::Schema {
        field: "<document>".into(),
        reason: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| CountsError::Schema {
        field: "<document>".into(),
        reason: "expected a JSON object".into(),
    })?;
    LogicalCounts::from_object(obj, lenient)
}

/// Serializes counts as a single-line JSON object with fields in canonical order.
pub fn save_logical_counts(counts: &LogicalCounts) -> String {
    serde_json::to_string(counts).expect("integer struct always serializes")
}
