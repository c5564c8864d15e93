//! Small dense complex matrices and pure-state vectors.
//!
//! Operator dimensions here are tiny (`m ≤ 8` for the game operators, `m^n`
//! amplitudes for the joint state), so everything is a plain row-major
//! `Vec<Complex64>` with the dimension carried alongside and checked on every
//! composition.

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use super::QuantumError;

/// Norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    /// Builds a matrix from an entry function over (row, col).
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, QuantumError> {
        if self.dim != rhs.dim {
            return Err(QuantumError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for k in 0..self.dim {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..self.dim {
                    let v = out.get(r, c) + a * rhs.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, QuantumError> {
        if self.dim != rhs.dim {
            return Err(QuantumError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        Ok(Self::from_fn(self.dim, |r, c| self.get(r, c) + rhs.get(r, c)))
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        Self::from_fn(self.dim, |r, c| self.get(r, c) * factor)
    }

    pub fn pow(&self, exponent: u32) -> Result<ComplexMatrix, QuantumError> {
        let mut out = Self::identity(self.dim);
        for _ in 0..exponent {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, rhs.dim, "max_abs_diff on mismatched dimensions");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of `U†U − I`; 0 for exactly unitary matrices.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.dagger().mul(self).expect("same dimension");
        product.max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        for r in 0..self.dim {
            for c in 0..self.dim {
                if r != c && self.get(r, c).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>, QuantumError> {
        if v.len() != self.dim {
            return Err(QuantumError::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect())
    }
}

// Debug export format: rows of [re, im] pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut rows = serializer.serialize_seq(Some(self.dim))?;
        for r in 0..self.dim {
            let row: Vec<[f64; 2]> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    [z.re, z.im]
                })
                .collect();
            rows.serialize_element(&row)?;
        }
        rows.end()
    }
}

/// Normalized complex amplitude vector.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let state = PureState { amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QuantumError::NotNormalized {
                norm,
                tol: NORM_TOL,
            });
        }
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies a `site_dim × site_dim` operator to one tensor factor of a
    /// state on `n_sites` factors of dimension `site_dim`. Sites count from 0,
    /// with site 0 the most significant base-`site_dim` digit of the index.
    pub fn apply_single_site(
        &mut self,
        op: &ComplexMatrix,
        site: usize,
        site_dim: usize,
        n_sites: usize,
    ) -> Result<(), QuantumError> {
        if op.dim() != site_dim {
            return Err(QuantumError::DimensionMismatch {
                left: op.dim(),
                right: site_dim,
            });
        }
        let total = site_dim.pow(n_sites as u32);
        if total != self.amplitudes.len() || site >= n_sites {
            return Err(QuantumError::DimensionMismatch {
                left: total,
                right: self.amplitudes.len(),
            });
        }
        // index = outer * (site_dim * inner_len) + digit * inner_len + inner
        let inner_len = site_dim.pow((n_sites - site - 1) as u32);
        let outer_len = total / (site_dim * inner_len);
        let mut scratch = vec![Complex64::new(0.0, 0.0); site_dim];
        for outer in 0..outer_len {
            for inner in 0..inner_len {
                let base = outer * site_dim * inner_len + inner;
                for digit in 0..site_dim {
                    scratch[digit] = self.amplitudes[base + digit * inner_len];
                }
                for row in 0..site_dim {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..site_dim {
                        acc += op.get(row, col) * scratch[col];
                    }
                    self.amplitudes[base + row * inner_len] = acc;
                }
            }
        }
        Ok(())
    }
}
