//! Error-budget distributions on the simplex: random sampling, the uniform
//! baseline and normalization of arbitrary non-negative triples.
//!
//! All randomness comes from [`ChaCha8Rng`]. A 64-bit seed selects the key,
//! and independent tasks (circuits, trees) draw from separate ChaCha streams
//! of that key, see [`task_rng`]. Streams are counter based, so a task's
//! draws never depend on how many other tasks ran or in which order.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative floor applied to every component: each component is at least
/// `FLOOR_FRACTION * total`.
pub const FLOOR_FRACTION: f64 = 1e-9;

/// Relative tolerance of the sum-to-total invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Absolute floor for a given total budget.
pub fn floor(total: f64) -> f64 {
    FLOOR_FRACTION * total
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("total budget must lie in (0, 1), got {0}")]
    InvalidTotal(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("distribution violates simplex invariant: {0}")]
    NotOnSimplex(String),
}

/// Split of a total error budget into logical, T-state and rotation parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetDistribution {
    pub logical: f64,
    pub t_states: f64,
    pub rotations: f64,
    pub total: f64,
}

impl BudgetDistribution {
    /// Builds a distribution from explicit components and checks the
    /// simplex invariants against `total`.
    pub fn new(logical: f64, t_states: f64, rotations: f64, total: f64) -> Result<Self, BudgetError> {
        let b = Self {
            logical,
            t_states,
            rotations,
            total,
        };
        b.validate()?;
        Ok(b)
    }

    /// Distribution whose total is the sum of the given components.
    pub fn from_components(logical: f64, t_states: f64, rotations: f64) -> Result<Self, BudgetError> {
        Self::new(logical, t_states, rotations, logical + t_states + rotations)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.logical, self.t_states, self.rotations]
    }

    /// Components as fractions of the total.
    pub fn fractions(&self) -> [f64; 3] {
        self.components().map(|c| c / self.total)
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        check_total(self.total)?;
        let sum: f64 = self.components().iter().sum();
        if !sum.is_finite() || (sum - self.total).abs() > SUM_TOLERANCE * self.total {
            return Err(BudgetError::NotOnSimplex(format!(
                "components sum to {sum:e}, expected {:e}",
                self.total
            )));
        }
        // the floor is checked with a hair of slack for the proportional
        // surplus removal in `clamp_to_floor`
        let min = floor(self.total) * (1.0 - 1e-6);
        for (name, c) in ["logical", "t_states", "rotations"].iter().zip(self.components()) {
            if c.is_nan() || c < min {
                return Err(BudgetError::NotOnSimplex(format!(
                    "{name} component {c:e} is below the floor {:e}",
                    floor(self.total)
                )));
            }
        }
        Ok(())
    }

    fn from_array(c: [f64; 3], total: f64) -> Self {
        Self {
            logical: c[0],
            t_states: c[1],
            rotations: c[2],
            total,
        }
    }
}

fn check_total(total: f64) -> Result<(), BudgetError> {
    if total > 0.0 && total < 1.0 {
        Ok(())
    } else {
        Err(BudgetError::InvalidTotal(total))
    }
}

/// Raises components below the floor to the floor and removes the surplus
/// proportionally from the remaining components. Input must sum to `total`.
fn clamp_to_floor(mut c: [f64; 3], total: f64) -> [f64; 3] {
    let f = floor(total);
    let mut clamped = [false; 3];
    // the clamped set only grows, so this settles within three passes
    for _ in 0..3 {
        let mut surplus = 0.0;
        for i in 0..3 {
            if !clamped[i] && c[i] < f {
                surplus += f - c[i];
                c[i] = f;
                clamped[i] = true;
            }
        }
        if surplus == 0.0 {
            break;
        }
        let free: f64 = (0..3).filter(|&i| !clamped[i]).map(|i| c[i]).sum();
        for i in 0..3 {
            if !clamped[i] {
                c[i] -= surplus * c[i] / free;
            }
        }
    }
    c
}

/// `(total/3, total/3, total/3)`.
pub fn uniform_distribution(total: f64) -> Result<BudgetDistribution, BudgetError> {
    check_total(total)?;
    let third = total / 3.0;
    Ok(BudgetDistribution::from_array([third; 3], total))
}

/// Scales a non-negative triple to sum to `total`, then applies the floor.
pub fn normalize(raw: [f64; 3], total: f64) -> Result<BudgetDistribution, BudgetError> {
    check_total(total)?;
    if raw.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(BudgetError::DegenerateInput(format!(
            "components must be finite and non-negative, got {raw:?}"
        )));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(BudgetError::DegenerateInput(
            "at least one component must be positive".into(),
        ));
    }
    let scaled = raw.map(|x| x / sum * total);
    Ok(BudgetDistribution::from_array(clamp_to_floor(scaled, total), total))
}

/// Draws `x_L, x_T, x_R ~ U(0,1)` independently and rescales them to sum to
/// `total`, followed by the floor clamp.
pub fn sample_distribution<R: Rng + ?Sized>(rng: &mut R, total: f64) -> Result<BudgetDistribution, BudgetError> {
    check_total(total)?;
    loop {
        let raw: [f64; 3] = [rng.sample(Open01), rng.sample(Open01), rng.sample(Open01)];
        if raw.iter().sum::<f64>() > 0.0 {
            return normalize(raw, total);
        }
    }
}

/// Generator for task `stream` under the experiment seed `seed`.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit FNV-1a hash, used to map circuit ids to stream numbers.
pub fn stable_hash(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for sub-task `index` derived from `seed` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
