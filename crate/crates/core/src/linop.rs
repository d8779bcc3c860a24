//! Dense complex vectors and the operator-application contract.
//!
//! Every solver and generator in this crate talks to matrices through
//! [`LinearOperator::apply`]. Three storage kinds are provided: diagonal
//! (all normal test problems), dense row-major (small random systems used by
//! the projection oracle), and a truncated shift acting on polynomial
//! coefficients (the multiplication-by-`z` operator on the unit circle).

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinopError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vectors must have length at least one")]
    Empty,
    #[error("dense operator must be square: row {row} has length {len}, expected {dim}")]
    RaggedRows { row: usize, len: usize, dim: usize },
}

/// A fixed-length vector of complex coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, LinopError> {
        if entries.is_empty() {
            return Err(LinopError::Empty);
        }
        Ok(Self(entries))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); d.max(1)])
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![Complex64::new(1.0, 0.0); d.max(1)])
    }

    pub fn from_real(values: &[f64]) -> Result<Self, LinopError> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false: construction rejects empty vectors.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        Self(self.0.iter().map(|&v| alpha * v).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Euclidean norm, `sqrt(inner(v, v))`.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    fn check_len(&self, other: &Self) -> Result<(), LinopError> {
        if self.len() != other.len() {
            return Err(LinopError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &Self) -> Result<Self, LinopError> {
        self.check_len(other)?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// In-place `self += alpha * x`.
    pub(crate) fn add_scaled(&mut self, alpha: Complex64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (y, &xv) in self.0.iter_mut().zip(&x.0) {
            *y += alpha * xv;
        }
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl From<ComplexVector> for Vec<Complex64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

/// `Σ u_j · conj(v_j)`; the second argument is conjugated.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<Complex64, LinopError> {
    u.check_len(v)?;
    Ok(inner_unchecked(u.as_slice(), v.as_slice()))
}

pub(crate) fn inner_unchecked(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter()
        .zip(v)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj())
}

pub fn norm(v: &ComplexVector) -> f64 {
    v.norm()
}

/// Returns `y + alpha * x`.
pub fn axpy(
    alpha: Complex64,
    x: &ComplexVector,
    y: &ComplexVector,
) -> Result<ComplexVector, LinopError> {
    x.check_len(y)?;
    let mut out = y.clone();
    out.add_scaled(alpha, x);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearOperator {
    Diagonal { entries: ComplexVector },
    /// Row-major square matrix.
    Dense { rows: Vec<ComplexVector> },
    /// `I + scale·S` where `S` maps coefficient `i` to `i + 1` and drops the
    /// top coefficient. On polynomial coefficients in the monomial basis this
    /// is multiplication by `1 + scale·z`, exact while the degree stays below
    /// `dim - 1`.
    Shift { dim: usize, scale: Complex64 },
}

impl LinearOperator {
    pub fn diagonal(entries: ComplexVector) -> Self {
        Self::Diagonal { entries }
    }

    pub fn dense(rows: Vec<ComplexVector>) -> Result<Self, LinopError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinopError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(LinopError::RaggedRows {
                    row,
                    len: r.len(),
                    dim,
                });
            }
        }
        Ok(Self::Dense { rows })
    }

    pub fn identity_dense(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| {
                let mut r = ComplexVector::zeros(d);
                r[i] = Complex64::new(1.0, 0.0);
                r
            })
            .collect();
        Self::Dense { rows }
    }

    pub fn shift(dim: usize, scale: Complex64) -> Self {
        Self::Shift {
            dim: dim.max(1),
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal { entries } => entries.len(),
            Self::Dense { rows } => rows.len(),
            Self::Shift { dim, .. } => *dim,
        }
    }

    /// Diagonal entries when the operator is diagonal.
    pub fn diagonal_entries(&self) -> Option<&ComplexVector> {
        match self {
            Self::Diagonal { entries } => Some(entries),
            _ => None,
        }
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector, LinopError> {
        if v.len() != self.dim() {
            return Err(LinopError::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let out = match self {
            Self::Diagonal { entries } => entries.iter().zip(v.iter()).map(|(m, x)| m * x).collect(),
            Self::Dense { rows } => rows
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(v.iter())
                        .fold(Complex64::new(0.0, 0.0), |acc, (a, x)| acc + a * x)
                })
                .collect(),
            Self::Shift { dim, scale } => {
                let mut out = v.as_slice().to_vec();
                for i in 1..*dim {
                    out[i] += scale * v[i - 1];
                }
                out
            }
        };
        Ok(ComplexVector(out))
    }

    /// Spectral norm for the kinds where it is cheap and exact: the largest
    /// modulus on the diagonal. `None` for dense and shift operators.
    pub fn diagonal_norm(&self) -> Option<f64> {
        self.diagonal_entries()
            .map(|e| e.iter().map(|m| m.norm()).fold(0.0, f64::max))
    }
}
