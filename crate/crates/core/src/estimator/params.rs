use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical hardware and code parameters of the cost model.
///
/// Config files (JSON or TOML) use exactly these field names; omitted fields
/// take the defaults. `t_phys` is in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Physical error rate per operation.
    pub p_phys: f64,
    pub p_threshold: f64,
    /// Prefactor of the logical error model.
    pub prefactor_a: f64,
    /// Physical cycle time in seconds.
    pub t_phys: f64,
    /// Physical cycles per logical cycle per unit of code distance.
    pub cycle_factor: f64,
    /// Error rate of a raw injected T state.
    pub p_injection: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            p_phys: 1e-3,
            p_threshold: 1e-2,
            prefactor_a: 0.03,
            t_phys: 100e-9,
            cycle_factor: 6.0,
            p_injection: 1e-2,
        }
    }
}

const FIELDS: [&str; 6] = [
    "p_phys",
    "p_threshold",
    "prefactor_a",
    "t_phys",
    "cycle_factor",
    "p_injection",
];

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed parameters: {0}")]
    Format(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

impl PhysicalParams {
    /// Physical qubits of one surface-code tile at distance `d`.
    pub fn qubits_per_tile(d: u32) -> u64 {
        2 * u64::from(d) * u64::from(d)
    }

    /// Per-qubit, per-logical-cycle error `a * (p / p_th)^((d + 1) / 2)` at
    /// odd distance `d`.
    pub fn logical_error_rate(&self, d: u32) -> f64 {
        self.prefactor_a * (self.p_phys / self.p_threshold).powi(d.div_ceil(2) as i32)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let ok = 0.0 < self.p_phys
            && self.p_phys < self.p_threshold
            && self.p_threshold < 1.0
            && self.prefactor_a > 0.0
            && self.t_phys > 0.0
            && self.cycle_factor >= 1.0
            && 0.0 < self.p_injection
            && self.p_injection < 1.0
            && [self.prefactor_a, self.t_phys, self.cycle_factor]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(ParamsError::Invalid(format!(
                "require 0 < p_phys < p_threshold < 1, prefactor_a > 0, t_phys > 0, \
                 cycle_factor >= 1, 0 < p_injection < 1; got {self:?}"
            )))
        }
    }

    fn from_value(value: serde_json::Value, lenient: bool) -> Result<Self, ParamsError> {
        let value = match value {
            serde_json::Value::Object(mut obj) if lenient => {
                obj.retain(|k, _| FIELDS.contains(&k.as_str()));
                serde_json::Value::Object(obj)
            }
            other => other,
        };
        let params: Self = serde_json::from_value(value).map_err(|e| ParamsError::Format(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn from_json_str(text: &str, lenient: bool) -> Result<Self, ParamsError> {
        let value = serde_json::from_str(text).map_err(|e| ParamsError::Format(e.to_string()))?;
        Self::from_value(value, lenient)
    }

    pub fn from_toml_str(text: &str, lenient: bool) -> Result<Self, ParamsError> {
        let value: serde_json::Value = toml::from_str(text).map_err(|e| ParamsError::Format(e.to_string()))?;
        Self::from_value(value, lenient)
    }

    /// Loads a config file; `.toml` files are read as TOML, anything else as JSON.
    pub fn load(path: &Path, lenient: bool) -> Result<Self, ParamsError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParamsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            Self::from_toml_str(&text, lenient)
        } else {
            Self::from_json_str(&text, lenient)
        }
    }
}
