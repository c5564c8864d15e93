//! Measurement operators for one stage of the sequential game.
//!
//! The normative construction comes from the bond space of the GHZ
//! matrix-product state: the state has bond dimension `m`, so the local
//! unitary-then-measure step of the spatial protocol maps to a diagonal
//! operator on a single m-level system,
//!
//! ```text
//! [K_Y]_ii = ⟨Y| F† S^X |i⟩ = (1/√m) · exp(2πi·i·X/(d·m)) · exp(−2πi·Y·i/m)
//! ```
//!
//! where `F` is the m-point Fourier matrix and `S` the phase gradient. These
//! operators form a complete POVM by construction.
//!
//! A second, closed-form construction (`A_Y · M` with tabulated diagonal
//! `A_Y` for m ∈ {2, 4, 6} and a phase diagonal `M`) is also provided. Its
//! phase exponent "(2^j − 2)" admits two readings — a power of two or the
//! product `2j − 2` — and neither is assumed correct: completeness is
//! recorded at build time and distribution agreement is audited against the
//! spatial simulation, never presupposed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::ComplexMatrix;
use super::QuantumError;

/// Tolerance for the POVM completeness check `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// How to read the closed-form phase exponent "(2^j − 2)".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentReading {
    /// `2^j − 2` with j = 1..m.
    PowerOfTwo,
    /// `2j − 2` with j = 1..m.
    Linear,
}

impl std::fmt::Display for ExponentReading {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExponentReading::PowerOfTwo => write!(f, "power-of-two"),
            ExponentReading::Linear => write!(f, "linear"),
        }
    }
}

/// Which operator construction backs a temporal simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrausConstruction {
    /// Derived from the GHZ bond representation; the normative construction.
    Bond,
    /// Tabulated closed form under one reading of its phase exponent.
    ClosedForm(ExponentReading),
}

impl KrausConstruction {
    pub fn build(&self, m: u32, d: u32, setting: u32) -> Result<KrausSet, QuantumError> {
        match self {
            KrausConstruction::Bond => kraus_from_setting(m, d, setting),
            KrausConstruction::ClosedForm(reading) => closed_form_kraus(m, d, setting, *reading),
        }
    }
}

impl std::fmt::Display for KrausConstruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KrausConstruction::Bond => write!(f, "bond"),
            KrausConstruction::ClosedForm(r) => write!(f, "closed-form({r})"),
        }
    }
}

/// The `m` measurement operators for one stage with input setting `X`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    setting: u32,
    m: u32,
    d: u32,
    construction: KrausConstruction,
    operators: Vec<ComplexMatrix>,
    completeness_defect: f64,
}

impl KrausSet {
    fn assemble(
        setting: u32,
        m: u32,
        d: u32,
        construction: KrausConstruction,
        operators: Vec<ComplexMatrix>,
    ) -> Self {
        let mut sum = ComplexMatrix::zeros(m as usize);
        for op in &operators {
            let gram = op.dagger().mul(op).expect("square operators");
            sum = sum.add(&gram).expect("same dimension");
        }
        let completeness_defect = sum.max_abs_diff(&ComplexMatrix::identity(m as usize));
        KrausSet {
            setting,
            m,
            d,
            construction,
            operators,
            completeness_defect,
        }
    }

    pub fn setting(&self) -> u32 {
        self.setting
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn construction(&self) -> KrausConstruction {
        self.construction
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn operator(&self, outcome: u32) -> &ComplexMatrix {
        &self.operators[outcome as usize]
    }

    /// Max-abs deviation of `Σ K†K` from the identity, recorded at build time.
    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    pub fn is_complete(&self) -> bool {
        self.completeness_defect <= COMPLETENESS_TOL
    }

    /// Diagonals of all operators; every construction here is diagonal.
    pub fn diagonals(&self) -> Vec<Vec<Complex64>> {
        self.operators.iter().map(|op| op.diagonal()).collect()
    }
}

/// Unit phase `exp(iθ)`.
fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// m-point Fourier matrix, `[F]_ab = (1/√m) exp(2πi·a·b/m)`.
pub fn fourier_matrix(m: u32) -> ComplexMatrix {
    let scale = 1.0 / (m as f64).sqrt();
    ComplexMatrix::from_fn(m as usize, |a, b| {
        phase(2.0 * PI * (a as f64) * (b as f64) / m as f64) * scale
    })
}

/// Diagonal phase gradient raised to the input setting:
/// entries `exp(2πi·b·X/(d·m))` for b = 0..m−1.
pub fn phase_matrix(m: u32, d: u32, setting: u32) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..m)
        .map(|b| {
            phase(2.0 * PI * f64::from(b) * f64::from(setting) / (f64::from(d) * f64::from(m)))
        })
        .collect();
    ComplexMatrix::from_diagonal(&entries)
}

/// Bond-space operators: `[K_Y]_ii = (1/√m)·exp(2πi·i·X/(dm))·exp(−2πi·Y·i/m)`.
pub fn kraus_from_setting(m: u32, d: u32, setting: u32) -> Result<KrausSet, QuantumError> {
    if m < 2 || d < 2 {
        return Err(QuantumError::InvalidParameter(format!(
            "need m >= 2 and d >= 2, got m={m}, d={d}"
        )));
    }
    if setting >= d {
        return Err(QuantumError::InvalidParameter(format!(
            "setting {setting} outside alphabet 0..{d}"
        )));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let operators = (0..m)
        .map(|y| {
            let entries: Vec<Complex64> = (0..m)
                .map(|i| {
                    let input_phase = 2.0 * PI * f64::from(i) * f64::from(setting)
                        / (f64::from(d) * f64::from(m));
                    let outcome_phase = -2.0 * PI * f64::from(y) * f64::from(i) / f64::from(m);
                    phase(input_phase + outcome_phase) * scale
                })
                .collect();
            ComplexMatrix::from_diagonal(&entries)
        })
        .collect();
    Ok(KrausSet::assemble(
        setting,
        m,
        d,
        KrausConstruction::Bond,
        operators,
    ))
}

/// Tabulated outcome factors for the closed-form construction.
///
/// `A_Y` entries for even m; only m ∈ {2, 4, 6} are tabulated. Odd m uses the
/// pure phase diagonal for every outcome (`A_Y = I`).
fn outcome_factor(m: u32, y: u32) -> Result<Vec<Complex64>, QuantumError> {
    let one = Complex64::new(1.0, 0.0);
    let neg = Complex64::new(-1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let neg_i = Complex64::new(0.0, -1.0);
    if m % 2 == 1 {
        return Ok(vec![one; m as usize]);
    }
    match (m, y) {
        (2, 0) => Ok(vec![one, one]),
        (2, 1) => Ok(vec![one, neg]),
        (4, 0) => Ok(vec![one, one, one, one]),
        (4, 1) => Ok(vec![one, neg_i, neg, i]),
        (4, 2) => Ok(vec![one, neg, one, neg]),
        (4, 3) => Ok(vec![one, i, neg, neg_i]),
        (6, 0) | (6, 2) | (6, 4) => Ok(vec![one; 6]),
        (6, 1) | (6, 3) | (6, 5) => Ok(vec![one, neg, one, neg, one, neg]),
        _ => Err(QuantumError::NoOperatorTable(m)),
    }
}

/// Closed-form operators `K_Y = A_Y · M(X)` with
/// `[M]_jj = (1/√m)·exp(i·π·X·e_j/d)` for j = 1..m, where `e_j` is the
/// exponent under the chosen reading. Completeness is checked, not assumed;
/// inspect [`KrausSet::completeness_defect`] on the result.
pub fn closed_form_kraus(
    m: u32,
    d: u32,
    setting: u32,
    reading: ExponentReading,
) -> Result<KrausSet, QuantumError> {
    if m < 2 || d < 2 {
        return Err(QuantumError::InvalidParameter(format!(
            "need m >= 2 and d >= 2, got m={m}, d={d}"
        )));
    }
    if setting >= d {
        return Err(QuantumError::InvalidParameter(format!(
            "setting {setting} outside alphabet 0..{d}"
        )));
    }
    if m % 2 == 0 && !matches!(m, 2 | 4 | 6) {
        return Err(QuantumError::NoOperatorTable(m));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let phase_diag: Vec<Complex64> = (1..=m)
        .map(|j| {
            let e_j = match reading {
                ExponentReading::PowerOfTwo => 2f64.powi(j as i32) - 2.0,
                ExponentReading::Linear => 2.0 * f64::from(j) - 2.0,
            };
            phase(PI * f64::from(setting) * e_j / f64::from(d)) * scale
        })
        .collect();
    let operators = (0..m)
        .map(|y| {
            let factors = outcome_factor(m, y)?;
            let entries: Vec<Complex64> = phase_diag
                .iter()
                .zip(&factors)
                .map(|(p, f)| p * f)
                .collect();
            Ok(ComplexMatrix::from_diagonal(&entries))
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    Ok(KrausSet::assemble(
        setting,
        m,
        d,
        KrausConstruction::ClosedForm(reading),
        operators,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fourier_m2_is_hadamard() {
        let f = fourier_matrix(2);
        let s = 1.0 / 2f64.sqrt();
        assert!((f.get(0, 0) - c(s, 0.0)).norm() < TOL);
        assert!((f.get(0, 1) - c(s, 0.0)).norm() < TOL);
        assert!((f.get(1, 0) - c(s, 0.0)).norm() < TOL);
        assert!((f.get(1, 1) - c(-s, 0.0)).norm() < TOL);
    }

    #[test]
    fn fourier_is_unitary_up_to_m8() {
        for m in 2..=8 {
            assert!(
                fourier_matrix(m).unitarity_defect() < TOL,
                "F_{m} not unitary"
            );
        }
    }

    #[test]
    fn fourier_m4_entry_1_1_is_i_over_2() {
        let f = fourier_matrix(4);
        assert!((f.get(1, 1) - c(0.0, 0.5)).norm() < TOL);
    }

    #[test]
    fn phase_matrix_at_zero_setting_is_identity() {
        let s = phase_matrix(5, 3, 0);
        assert!(s.max_abs_diff(&ComplexMatrix::identity(5)) < TOL);
    }

    #[test]
    fn phase_matrix_m2_d2_x1() {
        let s = phase_matrix(2, 2, 1);
        assert!((s.get(0, 0) - c(1.0, 0.0)).norm() < TOL);
        assert!((s.get(1, 1) - c(0.0, 1.0)).norm() < TOL);
    }

    #[test]
    fn phase_matrix_dth_power_gives_mth_roots() {
        // S^d has entries exp(2πi·b/m) regardless of d.
        for (m, d) in [(2u32, 2u32), (3, 4), (4, 3), (6, 6)] {
            let s = phase_matrix(m, d, 1);
            let powered = s.pow(d).unwrap();
            let roots = ComplexMatrix::from_diagonal(
                &(0..m)
                    .map(|b| phase(2.0 * PI * f64::from(b) / f64::from(m)))
                    .collect::<Vec<_>>(),
            );
            assert!(powered.max_abs_diff(&roots) < 1e-11, "(m,d)=({m},{d})");
        }
    }

    #[test]
    fn bond_kraus_complete_for_all_small_parameters() {
        for m in 2..=8u32 {
            for d in 2..=8u32 {
                for x in 0..d {
                    let set = kraus_from_setting(m, d, x).unwrap();
                    assert!(
                        set.completeness_defect() <= COMPLETENESS_TOL,
                        "POVM incomplete at m={m}, d={d}, x={x}: defect {}",
                        set.completeness_defect()
                    );
                }
            }
        }
    }

    #[test]
    fn bond_kraus_m2_d2_x0_y1_matches_closed_entry() {
        let set = kraus_from_setting(2, 2, 0).unwrap();
        let k1 = set.operator(1);
        let s = 1.0 / 2f64.sqrt();
        assert!((k1.get(0, 0) - c(s, 0.0)).norm() < TOL);
        assert!((k1.get(1, 1) - c(-s, 0.0)).norm() < TOL);
        assert!(k1.is_diagonal(0.0));
    }

    #[test]
    fn bond_kraus_entries_have_modulus_inverse_sqrt_m() {
        for (m, d, x) in [(2u32, 2u32, 1u32), (4, 4, 3), (6, 6, 5), (3, 5, 2)] {
            let set = kraus_from_setting(m, d, x).unwrap();
            let expected = 1.0 / (m as f64).sqrt();
            for op in set.operators() {
                for entry in op.diagonal() {
                    assert!((entry.norm() - expected).abs() < TOL);
                }
            }
        }
    }

    #[test]
    fn bond_kraus_diagonal_equals_unitary_row() {
        // [K_Y]_ii must equal row Y of F†·S^X.
        for (m, d, x) in [(2u32, 2u32, 1u32), (4, 4, 2), (5, 3, 1)] {
            let u = fourier_matrix(m)
                .dagger()
                .mul(&phase_matrix(m, d, x))
                .unwrap();
            let set = kraus_from_setting(m, d, x).unwrap();
            for y in 0..m {
                for i in 0..m as usize {
                    let diff = (set.operator(y).get(i, i) - u.get(y as usize, i)).norm();
                    assert!(diff < TOL, "mismatch at m={m} d={d} x={x} y={y} i={i}");
                }
            }
        }
    }

    #[test]
    fn closed_form_m2_outcome_factors() {
        for reading in [ExponentReading::PowerOfTwo, ExponentReading::Linear] {
            let set = closed_form_kraus(2, 2, 0, reading).unwrap();
            let s = 1.0 / 2f64.sqrt();
            // A_0 = diag(1,1), A_1 = diag(1,−1) on top of M(X=0) = I/√2
            assert!((set.operator(0).get(0, 0) - c(s, 0.0)).norm() < TOL);
            assert!((set.operator(0).get(1, 1) - c(s, 0.0)).norm() < TOL);
            assert!((set.operator(1).get(1, 1) - c(-s, 0.0)).norm() < TOL);
        }
    }

    #[test]
    fn closed_form_m4_and_m6_tables() {
        let set = closed_form_kraus(4, 4, 0, ExponentReading::Linear).unwrap();
        let s = 0.5;
        let a1_expected = [c(s, 0.0), c(0.0, -s), c(-s, 0.0), c(0.0, s)];
        for (i, want) in a1_expected.iter().enumerate() {
            assert!((set.operator(1).get(i, i) - want).norm() < TOL);
        }

        let set6 = closed_form_kraus(6, 6, 0, ExponentReading::Linear).unwrap();
        for y in [1, 3, 5] {
            for i in 0..6 {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let want = c(sign / 6f64.sqrt(), 0.0);
                assert!((set6.operator(y).get(i, i) - want).norm() < TOL);
            }
        }
    }

    #[test]
    fn closed_form_rejects_untabulated_even_m() {
        let err = closed_form_kraus(8, 8, 0, ExponentReading::Linear).unwrap_err();
        assert!(matches!(err, QuantumError::NoOperatorTable(8)));
    }

    #[test]
    fn closed_form_completeness_is_recorded_true() {
        // All entries have modulus 1/√m, so Σ K†K = I holds for every variant
        // even where the distribution later disagrees with the spatial one.
        for reading in [ExponentReading::PowerOfTwo, ExponentReading::Linear] {
            for (m, d) in [(2u32, 2u32), (4, 4), (6, 6), (3, 3), (5, 4)] {
                for x in 0..d {
                    let set = closed_form_kraus(m, d, x, reading).unwrap();
                    assert!(set.is_complete(), "m={m} d={d} x={x} {reading}");
                }
            }
        }
    }
}
