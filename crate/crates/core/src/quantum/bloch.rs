//! Sequential projective measurements on a single qubit.
//!
//! Measurement directions are unit Bloch vectors. The n-point correlation
//! `E[α_1···α_n]` is computed exactly from the full branch tree of Lüders
//! collapses: every outcome sign sequence is a branch, each branch carries an
//! unnormalized conditional density operator, and the expectation sums
//! `(Π signs) · tr(ρ_branch)` over all `2^n` branches.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::ComplexMatrix;
use super::{Limits, QuantumError};

/// Unit-norm tolerance for Bloch vectors.
pub const BLOCH_NORM_TOL: f64 = 1e-12;

/// A measurement direction: a unit vector on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochSetting([f64; 3]);

impl BlochSetting {
    pub fn new(components: [f64; 3]) -> Result<Self, QuantumError> {
        let norm = norm3(&components);
        if (norm - 1.0).abs() > BLOCH_NORM_TOL {
            return Err(QuantumError::NotNormalized {
                norm,
                tol: BLOCH_NORM_TOL,
            });
        }
        Ok(BlochSetting(components))
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn from_unnormalized(components: [f64; 3]) -> Result<Self, QuantumError> {
        let norm = norm3(&components);
        if norm < 1e-12 {
            return Err(QuantumError::InvalidParameter(
                "cannot normalize a near-zero direction".into(),
            ));
        }
        Ok(BlochSetting([
            components[0] / norm,
            components[1] / norm,
            components[2] / norm,
        ]))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &BlochSetting) -> f64 {
        dot3(&self.0, &other.0)
    }
}

impl TryFrom<[f64; 3]> for BlochSetting {
    type Error = QuantumError;
    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        BlochSetting::new(v)
    }
}

impl From<BlochSetting> for [f64; 3] {
    fn from(b: BlochSetting) -> [f64; 3] {
        b.0
    }
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    dot3(v, v).sqrt()
}

/// Density operator `(I + r·σ)/2` for a Bloch vector `r` with `|r| ≤ 1`;
/// `|r| = 1` gives a pure state, `r = 0` the maximally mixed state.
pub fn density_from_bloch(r: [f64; 3]) -> Result<ComplexMatrix, QuantumError> {
    let norm = norm3(&r);
    if norm > 1.0 + BLOCH_NORM_TOL {
        return Err(QuantumError::InvalidParameter(format!(
            "Bloch vector of length {norm} is outside the ball"
        )));
    }
    let mut rho = ComplexMatrix::zeros(2);
    rho.set(0, 0, Complex64::new((1.0 + r[2]) / 2.0, 0.0));
    rho.set(1, 1, Complex64::new((1.0 - r[2]) / 2.0, 0.0));
    rho.set(0, 1, Complex64::new(r[0] / 2.0, -r[1] / 2.0));
    rho.set(1, 0, Complex64::new(r[0] / 2.0, r[1] / 2.0));
    Ok(rho)
}

pub fn maximally_mixed() -> ComplexMatrix {
    density_from_bloch([0.0, 0.0, 0.0]).expect("origin is in the ball")
}

/// Projector `(I + sign·a·σ)/2` onto the ±1 eigenspace along `a`.
fn projector(a: &BlochSetting, sign: f64) -> ComplexMatrix {
    let [x, y, z] = a.components();
    let mut p = ComplexMatrix::zeros(2);
    p.set(0, 0, Complex64::new((1.0 + sign * z) / 2.0, 0.0));
    p.set(1, 1, Complex64::new((1.0 - sign * z) / 2.0, 0.0));
    p.set(0, 1, Complex64::new(sign * x / 2.0, -sign * y / 2.0));
    p.set(1, 0, Complex64::new(sign * x / 2.0, sign * y / 2.0));
    p
}

/// Exact n-point correlation `E[α_1···α_n]` of sequential projective
/// measurements along `settings`, starting from the density operator
/// `initial` (trace 1, dimension 2), with Lüders collapse after each
/// measurement.
pub fn qubit_projective_chain(
    settings: &[BlochSetting],
    initial: &ComplexMatrix,
    limits: &Limits,
) -> Result<f64, QuantumError> {
    if settings.len() < 2 {
        return Err(QuantumError::InvalidParameter(
            "need at least two measurements for a correlation".into(),
        ));
    }
    if initial.dim() != 2 {
        return Err(QuantumError::DimensionMismatch {
            left: initial.dim(),
            right: 2,
        });
    }
    let trace = initial.trace();
    if (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-9 {
        return Err(QuantumError::NotNormalized {
            norm: trace.norm(),
            tol: 1e-9,
        });
    }
    let branches = 1u128
        .checked_shl(settings.len() as u32)
        .filter(|&b| b <= limits.max_paths)
        .ok_or(QuantumError::CapExceeded {
            required: u128::MAX,
            cap: limits.max_paths,
        })?;
    let _ = branches;

    fn walk(settings: &[BlochSetting], rho: &ComplexMatrix, sign_product: f64) -> f64 {
        match settings.split_first() {
            None => sign_product * rho.trace().re,
            Some((a, rest)) => {
                let mut total = 0.0;
                for sign in [1.0, -1.0] {
                    let p = projector(a, sign);
                    let collapsed = p.mul(rho).and_then(|pr| pr.mul(&p)).expect("2x2");
                    if collapsed.trace().re > 1e-15 {
                        total += walk(rest, &collapsed, sign_product * sign);
                    }
                }
                total
            }
        }
    }
    Ok(walk(settings, initial, 1.0))
}
