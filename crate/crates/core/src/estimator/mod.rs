//! Surface-code resource model.
//!
//! Maps a circuit's [`LogicalCounts`] and a [`BudgetDistribution`] to physical
//! qubits and runtime. Each budget component is consumed by exactly one stage:
//!
//! * `logical` selects the code distance of the algorithm's tiles,
//! * `t_states` sets the per-state target of the 15-to-1 distillation factory,
//! * `rotations` sets the synthesis precision of arbitrary-angle rotations.
//!
//! Everything here is a pure function of its inputs.

mod params;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::LogicalCounts;
use crate::sampler::BudgetDistribution;

pub use params::{ParamsError, PhysicalParams};

/// Slope of the rotation synthesis T-count fit, per bit of precision.
pub const SYNTHESIS_SLOPE: f64 = 0.53;
/// Offset of the rotation synthesis T-count fit.
pub const SYNTHESIS_OFFSET: f64 = 5.3;
/// T states consumed per Toffoli.
pub const TOFFOLI_T_STATES: u64 = 4;
/// Logical cycles spent per Toffoli.
pub const TOFFOLI_CYCLES: u64 = 3;
/// Largest code distance considered.
pub const MAX_DISTANCE: u32 = 99;
/// Largest number of distillation rounds considered.
pub const MAX_ROUNDS: u32 = 10;

/// Logical tiles occupied by one distillation stage.
const FACTORY_TILES: u64 = 16;
/// Physical cycle units per distillation round, per unit of factory distance.
const ROUND_CYCLES_PER_DISTANCE: u64 = 11;
/// Clifford locations per 15-to-1 round entering the factory distance criterion.
const FACTORY_CLIFFORD_LOCATIONS: f64 = 31.0;

/// Which budget component an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetComponent {
    Logical,
    TStates,
    Rotations,
}

impl fmt::Display for BudgetComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetComponent::Logical => "logical",
            BudgetComponent::TStates => "t_states",
            BudgetComponent::Rotations => "rotations",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("{component} budget too small: {reason}")]
    BudgetTooSmall { component: BudgetComponent, reason: String },
    #[error("{component} budget needs a code distance above {MAX_DISTANCE}")]
    DistanceOverflow { component: BudgetComponent },
    #[error("{component} budget needs more than {MAX_ROUNDS} distillation rounds")]
    TargetUnreachable { component: BudgetComponent },
}

impl EstimateError {
    /// Short variant name, used when recording skipped work.
    pub fn name(&self) -> &'static str {
        match self {
            EstimateError::BudgetTooSmall { .. } => "BudgetTooSmall",
            EstimateError::DistanceOverflow { .. } => "DistanceOverflow",
            EstimateError::TargetUnreachable { .. } => "TargetUnreachable",
        }
    }

    pub fn component(&self) -> BudgetComponent {
        match *self {
            EstimateError::BudgetTooSmall { component, .. }
            | EstimateError::DistanceOverflow { component }
            | EstimateError::TargetUnreachable { component } => component,
        }
    }
}

/// A distillation factory sized for a per-T-state error target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TFactoryDesign {
    pub rounds: u32,
    pub factory_distance: u32,
    /// Error of a delivered T state.
    pub output_error: f64,
    pub physical_qubits_per_factory: u64,
    /// Physical cycle units needed to deliver one T state.
    pub physical_cycles_per_tstate: u64,
    pub seconds_per_tstate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub physical_qubits: u64,
    pub runtime_seconds: f64,
    pub space_time_cost: f64,
    pub code_distance: u32,
    pub algorithmic_qubits: u64,
    pub logical_cycles: u64,
    pub t_per_rotation: u64,
    pub total_t_states: u64,
    pub factory_count: u64,
    pub factory_design: TFactoryDesign,
    pub achieved_logical_error: f64,
    pub achieved_tstate_error: f64,
    pub achieved_rotation_error: f64,
}

impl ResourceEstimate {
    /// Physical qubits spent on the algorithm's tiles (excluding factories).
    pub fn tile_qubits(&self) -> u64 {
        self.algorithmic_qubits * PhysicalParams::qubits_per_tile(self.code_distance)
    }

    pub fn factory_qubits(&self) -> u64 {
        self.factory_count * self.factory_design.physical_qubits_per_factory
    }
}

/// Logical qubits after layout routing overhead: `2Q + ceil(sqrt(8Q)) + 1`.
pub fn algorithmic_qubits(c: &LogicalCounts) -> u64 {
    let q = c.qubits;
    2 * q + ceil_sqrt(8 * q) + 1
}

/// Integer ceiling of the square root.
fn ceil_sqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}

/// T states per rotation and the achieved total rotation error when the
/// rotation budget is split equally among all rotations.
pub fn rotation_synthesis(c: &LogicalCounts, eps_rotations: f64) -> Result<(u64, f64), EstimateError> {
    if c.rotation_count == 0 {
        return Ok((0, 0.0));
    }
    let too_small = |reason: String| EstimateError::BudgetTooSmall {
        component: BudgetComponent::Rotations,
        reason,
    };
    if eps_rotations.is_nan() || eps_rotations <= 0.0 {
        return Err(too_small(format!("rotation budget {eps_rotations:e} is not positive")));
    }
    let n = c.rotation_count as f64;
    let per_rotation = eps_rotations / n;
    if !per_rotation.is_normal() {
        return Err(too_small(format!("per-rotation target {per_rotation:e} underflows")));
    }
    let achieved = |t: u64| n * (-(t as f64 - SYNTHESIS_OFFSET) / SYNTHESIS_SLOPE).exp2();
    let mut t = (SYNTHESIS_SLOPE * (1.0 / per_rotation).log2() + SYNTHESIS_OFFSET).ceil() as u64;
    // rounding at an exact integer boundary can leave the bound a ulp short
    while achieved(t) > eps_rotations {
        t += 1;
    }
    Ok((t, achieved(t)))
}

pub fn total_t_states(c: &LogicalCounts, t_per_rotation: u64) -> u64 {
    c.t_count + TOFFOLI_T_STATES * c.toffoli_count + c.rotation_count * t_per_rotation
}

/// Critical-path length in logical cycles; rotations on one layer are
/// synthesized sequentially. Never less than 1.
pub fn logical_cycles(c: &LogicalCounts, t_per_rotation: u64) -> u64 {
    let cycles = c.measurement_count + c.t_count + TOFFOLI_CYCLES * c.toffoli_count + c.rotation_depth * t_per_rotation;
    cycles.max(1)
}

/// Smallest odd `d >= 3` with `q_alg * cycles * p_L(d) <= eps_logical`.
pub fn select_code_distance(
    q_alg: u64,
    cycles: u64,
    eps_logical: f64,
    p: &PhysicalParams,
) -> Result<(u32, f64), EstimateError> {
    let volume = q_alg as f64 * cycles as f64;
    (3..=MAX_DISTANCE)
        .step_by(2)
        .map(|d| (d, volume * p.logical_error_rate(d)))
        .find(|&(_, err)| err <= eps_logical)
        .ok_or(EstimateError::DistanceOverflow {
            component: BudgetComponent::Logical,
        })
}

/// Sizes a 15-to-1 distillation factory for the given per-T-state target.
pub fn design_t_factory(target_error: f64, p: &PhysicalParams) -> Result<TFactoryDesign, EstimateError> {
    if target_error.is_nan() || target_error <= 0.0 {
        return Err(EstimateError::BudgetTooSmall {
            component: BudgetComponent::TStates,
            reason: format!("per-T-state target {target_error:e} is not positive"),
        });
    }
    let mut rounds = 0u32;
    let mut error = p.p_injection;
    while error > target_error {
        if rounds == MAX_ROUNDS {
            return Err(EstimateError::TargetUnreachable {
                component: BudgetComponent::TStates,
            });
        }
        error = 35.0 * error * error * error;
        rounds += 1;
    }

    if rounds == 0 {
        let d = 3;
        return Ok(TFactoryDesign {
            rounds,
            factory_distance: d,
            output_error: error,
            physical_qubits_per_factory: FACTORY_TILES * PhysicalParams::qubits_per_tile(d),
            physical_cycles_per_tstate: 1,
            seconds_per_tstate: p.t_phys,
        });
    }

    let locations = FACTORY_CLIFFORD_LOCATIONS * f64::from(rounds);
    let factory_distance = (3..=MAX_DISTANCE)
        .step_by(2)
        .find(|&d| locations * p.logical_error_rate(d) <= 0.1 * target_error)
        .ok_or(EstimateError::DistanceOverflow {
            component: BudgetComponent::TStates,
        })?;
    let cycles = u64::from(rounds) * ROUND_CYCLES_PER_DISTANCE * u64::from(factory_distance);
    Ok(TFactoryDesign {
        rounds,
        factory_distance,
        output_error: error,
        physical_qubits_per_factory: FACTORY_TILES
            * PhysicalParams::qubits_per_tile(factory_distance)
            * u64::from(rounds),
        physical_cycles_per_tstate: cycles,
        seconds_per_tstate: cycles as f64 * p.t_phys,
    })
}

/// Number of factories needed to deliver `total_t` states within the
/// algorithm's wall time.
pub fn count_factories(total_t: u64, cycles: u64, d: u32, f: &TFactoryDesign, p: &PhysicalParams) -> u64 {
    if total_t == 0 {
        return 0;
    }
    // both sides in physical cycle units so exact multiples stay exact
    let wall = cycles as f64 * p.cycle_factor * f64::from(d);
    let demand = total_t as f64 * f.physical_cycles_per_tstate as f64;
    ((demand / wall).ceil() as u64).max(1)
}

/// Full resource estimate for a circuit under a budget distribution.
pub fn estimate(
    c: &LogicalCounts,
    b: &BudgetDistribution,
    p: &PhysicalParams,
) -> Result<ResourceEstimate, EstimateError> {
    for (component, value) in [
        (BudgetComponent::Logical, b.logical),
        (BudgetComponent::TStates, b.t_states),
        (BudgetComponent::Rotations, b.rotations),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(EstimateError::BudgetTooSmall {
                component,
                reason: format!("component {value:e} is not a positive finite number"),
            });
        }
    }

    let (t_per_rotation, achieved_rotation_error) = rotation_synthesis(c, b.rotations)?;
    let total_t = total_t_states(c, t_per_rotation);
    let cycles = logical_cycles(c, t_per_rotation);
    let q_alg = algorithmic_qubits(c);
    let (d, achieved_logical_error) = select_code_distance(q_alg, cycles, b.logical, p)?;
    let factory = design_t_factory(b.t_states / total_t.max(1) as f64, p)?;
    let factory_count = count_factories(total_t, cycles, d, &factory, p);

    let physical_qubits =
        q_alg * PhysicalParams::qubits_per_tile(d) + factory_count * factory.physical_qubits_per_factory;
    let runtime_seconds = cycles as f64 * p.cycle_factor * f64::from(d) * p.t_phys;
    Ok(ResourceEstimate {
        physical_qubits,
        runtime_seconds,
        space_time_cost: physical_qubits as f64 * runtime_seconds,
        code_distance: d,
        algorithmic_qubits: q_alg,
        logical_cycles: cycles,
        t_per_rotation,
        total_t_states: total_t,
        factory_count,
        factory_design: factory,
        achieved_logical_error,
        achieved_tstate_error: total_t as f64 * factory.output_error,
        achieved_rotation_error,
    })
}
