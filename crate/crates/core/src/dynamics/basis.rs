//! The Bell-pair basis `|±_j> = (|up_j> ± |dn_j>)/sqrt(2)`.
//!
//! The transform keeps the flat index order and replaces the `(up, j)` slot
//! by `(+, j)` and the `(dn, j)` slot by `(-, j)`. Each 2x2 block is
//! `[[1, 1], [1, -1]] / sqrt(2)`, so the transform is its own inverse.

use std::fmt;

use num_complex::Complex64 as C64;

use super::StateVector;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, HermitianOperator};

/// A site of the transformed basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PmSite {
    A(usize),
    Plus(usize),
    Minus(usize),
}

impl PmSite {
    /// Flat index in the transformed basis.
    pub fn index(self) -> usize {
        match self {
            PmSite::A(j) => 3 * (j - 1),
            PmSite::Plus(j) => 3 * (j - 1) + 1,
            PmSite::Minus(j) => 3 * (j - 1) + 2,
        }
    }

    pub fn from_index(index: usize) -> Self {
        let j = index / 3 + 1;
        match index % 3 {
            0 => PmSite::A(j),
            1 => PmSite::Plus(j),
            _ => PmSite::Minus(j),
        }
    }
}

impl fmt::Display for PmSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmSite::A(j) => write!(f, "A{j}"),
            PmSite::Plus(j) => write!(f, "+{j}"),
            PmSite::Minus(j) => write!(f, "-{j}"),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim % 3 != 1 {
        return Err(Error::InvalidInput(format!(
            "dimension {dim} does not pair up/down rails (expected 3l+1)"
        )));
    }
    Ok(())
}

/// The (real, symmetric, involutory) transform matrix for `dim = 3l + 1`.
pub fn pm_transform_matrix(dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = CMatrix::zeros(dim, dim);
    for i in (0..dim).step_by(3) {
        u[(i, i)] = C64::new(1.0, 0.0);
    }
    for up in (1..dim).step_by(3) {
        let dn = up + 1;
        u[(up, up)] = C64::new(h, 0.0);
        u[(up, dn)] = C64::new(h, 0.0);
        u[(dn, up)] = C64::new(h, 0.0);
        u[(dn, dn)] = C64::new(-h, 0.0);
    }
    Ok(u)
}

/// Objects that can be expressed in the Bell-pair basis.
pub trait PmBasis: Sized {
    fn to_pm(&self) -> Result<Self>;
    #[allow(clippy::wrong_self_convention)]
    fn from_pm(&self) -> Result<Self>;
}

fn rotate_pairs(v: &CVector) -> Result<CVector> {
    check_dim(v.len())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = v.clone();
    for up in (1..v.len()).step_by(3) {
        let (a, b) = (v[up], v[up + 1]);
        out[up] = (a + b) * h;
        out[up + 1] = (a - b) * h;
    }
    Ok(out)
}

impl PmBasis for CVector {
    fn to_pm(&self) -> Result<Self> {
        rotate_pairs(self)
    }

    fn from_pm(&self) -> Result<Self> {
        rotate_pairs(self)
    }
}

impl PmBasis for StateVector {
    fn to_pm(&self) -> Result<Self> {
        StateVector::new(rotate_pairs(self.amplitudes())?)
    }

    fn from_pm(&self) -> Result<Self> {
        self.to_pm()
    }
}

impl PmBasis for HermitianOperator {
    fn to_pm(&self) -> Result<Self> {
        self.conjugate_by(&pm_transform_matrix(self.dim())?)
    }

    fn from_pm(&self) -> Result<Self> {
        self.to_pm()
    }
}

pub fn pm_basis_transform<T: PmBasis>(object: &T) -> Result<T> {
    object.to_pm()
}

pub fn inverse_pm_basis_transform<T: PmBasis>(object: &T) -> Result<T> {
    object.from_pm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Flux, RhombicLattice};

    #[test]
    fn up_site_maps_to_even_superposition() {
        let up = StateVector::basis(4, 1).unwrap();
        let pm = pm_basis_transform(&up).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [0.0, h, h, 0.0];
        for (z, e) in pm.amplitudes().iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn transform_is_involution() {
        let v = CVector::from_fn(7, |i, _| C64::new(i as f64 + 0.5, -(i as f64)));
        let back = inverse_pm_basis_transform(&pm_basis_transform(&v).unwrap()).unwrap();
        assert!((back - &v).norm() < 1e-12);
        let u = pm_transform_matrix(7).unwrap();
        assert!((&u * &u - CMatrix::identity(7, 7)).norm() < 1e-12);
        assert!((u * v.clone() - pm_basis_transform(&v).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn zero_flux_minus_states_decouple() {
        let h = RhombicLattice::uniform(3, Flux::Zero, 1.0).unwrap().hamiltonian();
        let hp = pm_basis_transform(&h).unwrap();
        for j in 1..=3 {
            let m = PmSite::Minus(j).index();
            for k in 0..hp.dim() {
                assert!(hp.get(m, k).norm() < 1e-12);
                assert!(hp.get(k, m).norm() < 1e-12);
            }
        }
        let r2 = 2f64.sqrt();
        for j in 1..=3 {
            let p = PmSite::Plus(j).index();
            assert!((hp.get(PmSite::A(j).index(), p).re + r2).abs() < 1e-12);
            assert!((hp.get(PmSite::A(j + 1).index(), p).re + r2).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_flux_splits_into_small_blocks() {
        let h = RhombicLattice::uniform(2, Flux::Pi, 1.0).unwrap().hamiltonian();
        let hp = pm_basis_transform(&h).unwrap();
        let r2 = 2f64.sqrt();
        let mut nonzero = Vec::new();
        for i in 0..7 {
            for k in (i + 1)..7 {
                if hp.get(i, k).norm() > 1e-12 {
                    nonzero.push((PmSite::from_index(i), PmSite::from_index(k)));
                    assert!((hp.get(i, k).norm() - r2).abs() < 1e-12);
                }
            }
        }
        use PmSite::*;
        assert_eq!(
            nonzero,
            vec![
                (A(1), Plus(1)),
                (Minus(1), A(2)),
                (A(2), Plus(2)),
                (Minus(2), A(3))
            ]
        );
    }

    #[test]
    fn rejects_unpaired_dimension() {
        assert!(pm_basis_transform(&CVector::zeros(6)).is_err());
        assert!(pm_transform_matrix(5).is_err());
    }
}
