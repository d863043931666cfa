use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::entropy::{integrand_reciprocal, VarianceSample};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;
/// Eigenvalues at or below this are treated as zero for logarithms.
pub const SINGULAR_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const NEGATIVITY_TOL: f64 = 1e-10;

/// Symmetric positive semidefinite matrix of dimension 1..=4. Eigenvalues
/// down to −1e-10 are accepted and treated as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

impl Serialize for SpdMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self
            .m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        rows.serialize(s)
    }
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if d == 0 || d > MAX_DIM || m.ncols() != d {
            return Err(Error::domain(format!(
                "expected a square matrix of size 1..={MAX_DIM}, got {}x{}",
                d,
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * m.amax().max(1.0) {
            return Err(Error::domain(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let m = (&m + m.transpose()) * 0.5;
        let min = m.clone().symmetric_eigenvalues().min();
        if min < -NEGATIVITY_TOL * m.amax().max(1.0) {
            return Err(Error::domain(format!(
                "matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self { m })
    }

    /// Row-major entries of a `d × d` matrix.
    pub fn from_rows(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::domain(format!(
                "expected {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub(crate) fn from_checked(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Eigenvalues clamped at 0 and the matching eigenvectors.
    pub fn spectrum(&self) -> (DVector<f64>, DMatrix<f64>) {
        let e = SymmetricEigen::new(self.m.clone());
        (e.eigenvalues.map(|l| l.max(0.0)), e.eigenvectors)
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

fn spectral(vals: &DVector<f64>, vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&vals.map(f));
    vecs * d * vecs.transpose()
}

/// Logarithm of a strictly positive definite matrix.
pub fn matrix_log(m: &SpdMatrix) -> Result<DMatrix<f64>> {
    let (vals, vecs) = m.spectrum();
    if vals.min() <= SINGULAR_TOL {
        return Err(Error::domain(format!(
            "matrix is singular (eigenvalue {:e})",
            vals.min()
        )));
    }
    Ok(spectral(&vals, &vecs, f64::ln))
}

/// Exponential of a symmetric matrix.
pub fn matrix_exp(sym: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new((sym + sym.transpose()) * 0.5);
    spectral(&e.eigenvalues, &e.eigenvectors, f64::exp)
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn matrix_sqrt(m: &SpdMatrix) -> DMatrix<f64> {
    let (vals, vecs) = m.spectrum();
    spectral(&vals, &vecs, f64::sqrt)
}

/// tr(M(log M − log N) + N − M), with zero eigenvalues of M contributing 0
/// to tr(M log M). Non-negative up to rounding, which is clamped.
pub fn quantum_entropy_rate(m: &SpdMatrix, n: &SpdMatrix) -> Result<f64> {
    if m.dim() != n.dim() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            m.dim(),
            n.dim()
        )));
    }
    let log_n = matrix_log(n)?;
    let (vals, _) = m.spectrum();
    let m_log_m: f64 = vals
        .iter()
        .map(|&l| if l == 0.0 { 0.0 } else { l * l.ln() })
        .sum();
    let m_log_n = (m.matrix() * log_n).trace();
    Ok((m_log_m - m_log_n + n.trace() - m.trace()).max(0.0))
}

/// tr(Σ log Σ) + d − tr Σ = Σ_i (λ_i log λ_i + 1 − λ_i): the rate against
/// the identity, evaluated eigenvalue by eigenvalue.
pub(crate) fn rate_against_identity(eigenvalues: impl Iterator<Item = f64>) -> f64 {
    eigenvalues
        .map(|l| VarianceSample::new(l.max(0.0)).map_or(f64::NAN, integrand_reciprocal))
        .sum()
}
