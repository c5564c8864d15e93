//! Communication-bound calculators.
//!
//! An under-communicating protocol is refutable when `d` is a power of two,
//! `m` is even, and enough stages stay below `log2(d/m)` bits. These helpers
//! pick parameters where that threshold exceeds the Holevo capacity
//! `log2 m` of the m-level system — sequences the classical side cannot
//! simulate without beating the capacity in some stage — and evaluate how the
//! requirement scales with the number of stages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::games::GameSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("m must be an even integer >= 2, got {0}")]
    OddDimension(u32),

    #[error("m must be at least 2, got {0}")]
    DimensionTooSmall(u32),

    #[error("the bound requires d a power of two and m even, got m={m}, d={d}")]
    Inapplicable { m: u32, d: u32 },

    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    BadEpsilon(f64),

    #[error("sweep needs n >= 4, got {0}")]
    SweepTooSmall(u64),

    #[error("theta constant must be positive and finite, got {0}")]
    BadConstant(f64),
}

/// Classical information capacity of an m-level system: `log2 m` bits.
pub fn holevo_bits(m: u32) -> f64 {
    f64::from(m).log2()
}

/// Parameters at which an m-level system's sequential correlations are
/// non-classical: every classical simulation must beat the Holevo bound in
/// some stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonclassicalityPlan {
    pub m: u32,
    /// Smallest power of two strictly above m².
    pub d: u64,
    /// Stage count from the headline threshold, `2m³`.
    pub n_min_headline: u64,
    /// Stage count the refutation construction itself needs, `m·d`.
    pub n_min_construction: u64,
    /// The binding choice: max of the two above.
    pub n_min: u64,
    pub holevo_bits: f64,
    /// `log2(d/m)` — what every non-exempt stage must send.
    pub required_bits_per_stage: f64,
    /// `m·d − 1` stages may stay below the requirement.
    pub max_exempt_stages: u64,
}

/// Plans a non-classical instance for even `m`: `d` is the smallest power of
/// two exceeding `m²` (so the per-stage requirement beats the Holevo bound)
/// and `n_min` covers both the headline `2m³` and the construction's `m·d`.
pub fn plan_nonclassical_params(m: u32) -> Result<NonclassicalityPlan, BoundsError> {
    if m < 2 {
        return Err(BoundsError::DimensionTooSmall(m));
    }
    if m % 2 != 0 {
        return Err(BoundsError::OddDimension(m));
    }
    let m_u64 = u64::from(m);
    let d = (m_u64 * m_u64 + 1).next_power_of_two();
    let n_min_headline = 2 * m_u64.pow(3);
    let n_min_construction = m_u64 * d;
    Ok(NonclassicalityPlan {
        m,
        d,
        n_min_headline,
        n_min_construction,
        n_min: n_min_headline.max(n_min_construction),
        holevo_bits: holevo_bits(m),
        required_bits_per_stage: (d as f64 / f64::from(m)).log2(),
        max_exempt_stages: m_u64 * d - 1,
    })
}

/// What the lower bound demands of one game instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunicationRequirement {
    /// `log2(d/m)` bits in every non-exempt stage.
    pub bits_per_stage: f64,
    /// At most `m·d − 1` stages may send less.
    pub max_exempt_stages: u64,
}

pub fn required_communication(spec: &GameSpec) -> Result<CommunicationRequirement, BoundsError> {
    if !spec.lower_bound_applicable() {
        return Err(BoundsError::Inapplicable {
            m: spec.m,
            d: spec.d,
        });
    }
    Ok(CommunicationRequirement {
        bits_per_stage: (f64::from(spec.d) / f64::from(spec.m)).log2(),
        max_exempt_stages: spec.modulus() - 1,
    })
}

/// One row of the stage-count sweep: with `d` pinned to the smallest power of
/// two at or above `theta·n^ε`, almost all of the n stages must send
/// `log2(d/m)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: u64,
    pub epsilon: f64,
    pub m: u32,
    /// The Θ-constant is pinned (default 1) and recorded here.
    pub theta_constant: f64,
    pub d: u64,
    pub bits_per_stage: f64,
    pub exempt_stages: u64,
    pub exempt_fraction: f64,
    /// True when `d ≤ m`: the bound says nothing at these parameters.
    pub vacuous: bool,
}

/// Evaluates the bound at `d = 2^⌈log2(theta·n^ε)⌉` for an m-level system.
pub fn scaling_sweep_point(
    n: u64,
    epsilon: f64,
    m: u32,
    theta_constant: f64,
) -> Result<SweepPoint, BoundsError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundsError::BadEpsilon(epsilon));
    }
    if n < 4 {
        return Err(BoundsError::SweepTooSmall(n));
    }
    if m < 2 {
        return Err(BoundsError::DimensionTooSmall(m));
    }
    if !(theta_constant > 0.0 && theta_constant.is_finite()) {
        return Err(BoundsError::BadConstant(theta_constant));
    }
    let raw = theta_constant * (n as f64).powf(epsilon);
    let d = (raw.ceil() as u64).max(1).next_power_of_two();
    let vacuous = d <= u64::from(m);
    let exempt_stages = u64::from(m) * d - 1;
    Ok(SweepPoint {
        n,
        epsilon,
        m,
        theta_constant,
        d,
        bits_per_stage: if vacuous {
            0.0
        } else {
            (d as f64 / f64::from(m)).log2()
        },
        exempt_stages,
        exempt_fraction: exempt_stages as f64 / n as f64,
        vacuous,
    })
}
