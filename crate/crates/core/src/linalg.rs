//! Dense complex Hermitian matrices and their spectral decomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const HERMITIAN_TOL: f64 = 1e-12;

/// A dense Hermitian matrix. Construction checks `A = A†` to within
/// `1e-12` relative to the largest entry magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                actual: entries.ncols(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        let dev = hermiticity_defect(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (relative defect {dev:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    /// Builds from a real symmetric matrix given row-major.
    pub fn from_real(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: values.len(),
            });
        }
        Self::new(CMatrix::from_fn(dim, dim, |i, j| {
            C64::new(values[i * dim + j], 0.0)
        }))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_inner(self) -> CMatrix {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    /// Largest absolute eigenvalue bound (max row 1-norm).
    pub fn norm_bound(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Full eigendecomposition with eigenvalues sorted ascending.
    pub fn eigh(&self) -> Spectrum {
        Spectrum::of(&self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn expectation(&self, psi: &CVector) -> f64 {
        (psi.adjoint() * &self.entries * psi)[(0, 0)].re
    }

    /// Returns `U A U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.nrows(),
            });
        }
        let mut m = u * &self.entries * u.adjoint();
        symmetrize(&mut m);
        Ok(Self { entries: m })
    }
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Replaces `m` by `(m + m†)/2`.
pub(crate) fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as
/// columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn of(m: &CMatrix) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let eig = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(exp(-i E t)) V† psi`.
    pub fn propagate(&self, psi: &CVector, t: f64) -> CVector {
        let coeffs = self.vectors.adjoint() * psi;
        self.propagate_coefficients(&coeffs, t)
    }

    /// Same as [`propagate`](Self::propagate) with precomputed eigenbasis
    /// coefficients `V† psi`.
    pub fn propagate_coefficients(&self, coeffs: &CVector, t: f64) -> CVector {
        let phased = CVector::from_fn(coeffs.len(), |k, _| {
            coeffs[k] * C64::from_polar(1.0, -self.values[k] * t)
        });
        &self.vectors * phased
    }

    /// Unitary `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let phases = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::from_polar(1.0, -self.values[i] * t)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.vectors * phases * self.vectors.adjoint()
    }

    /// Projector onto the eigenspace of the lowest eigenvalue, with
    /// degeneracy resolved at `tol`.
    pub fn ground_projector(&self, tol: f64) -> CMatrix {
        let n = self.dim();
        let e0 = self.values[0];
        let cols: Vec<usize> = (0..n).filter(|&k| self.values[k] - e0 <= tol).collect();
        let mut p = CMatrix::zeros(n, n);
        for &k in &cols {
            let v = self.vectors.column(k);
            p += v * v.adjoint();
        }
        p
    }

    /// Smallest spacing between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn spectrum_sorted_and_reconstructs() {
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.5),
                C64::new(0.2, 0.0),
                C64::new(0.0, -0.5),
                C64::new(-1.0, 0.0),
                C64::new(0.3, 0.1),
                C64::new(0.2, 0.0),
                C64::new(0.3, -0.1),
                C64::new(0.0, 0.0),
            ],
        ))
        .unwrap();
        let s = h.eigh();
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            3,
            s.values.iter().map(|&e| C64::new(e, 0.0)),
        ));
        let back = &s.vectors * d * s.vectors.adjoint();
        assert!((back - h.entries()).norm() < 1e-12);
    }

    #[test]
    fn propagator_is_unitary() {
        let h = HermitianOperator::from_real(2, &[0.3, 1.0, 1.0, -0.2]).unwrap();
        let u = h.eigh().propagator(1.7);
        let id = &u * u.adjoint();
        assert!((id - CMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
