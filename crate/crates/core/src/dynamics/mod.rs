//! Closed-system evolution in the single-excitation subspace.
//!
//! Propagation diagonalizes `H` once and applies `V exp(-i E t) V†` at every
//! requested time, so there is no step-size error to tune.

mod basis;
mod effective;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{basis_vector, CVector, HermitianOperator};
use crate::trace::PopulationTrace;

pub use basis::{inverse_pm_basis_transform, pm_basis_transform, pm_transform_matrix, PmBasis, PmSite};
pub use effective::{effective_model, verify_equivalence, EffectiveModel, ModelKind};

const NORM_TOL: f64 = 1e-10;

/// A normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self(amplitudes))
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize zero state".into()));
        }
        Self::new(amplitudes / C64::new(norm, 0.0))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        Ok(Self(basis_vector(dim, index)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("time grid"));
    }
    if times.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidInput("times must be nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("times must be sorted".into()));
    }
    Ok(())
}

/// States `exp(-i H t) psi0` at each requested time.
pub fn evolve_states(
    hamiltonian: &HermitianOperator,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Vec<CVector>> {
    if hamiltonian.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch {
            expected: hamiltonian.dim(),
            actual: psi0.dim(),
        });
    }
    check_times(times)?;
    let spec = hamiltonian.eigh();
    let coeffs = spec.vectors.adjoint() * psi0.amplitudes();
    Ok(times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                psi0.amplitudes().clone()
            } else {
                spec.propagate_coefficients(&coeffs, t)
            }
        })
        .collect())
}

/// Populations `|<i|exp(-i H t)|psi0>|^2` on the given time grid.
pub fn evolve_unitary(
    hamiltonian: &HermitianOperator,
    psi0: &StateVector,
    times: &[f64],
) -> Result<PopulationTrace> {
    let states = evolve_states(hamiltonian, psi0, times)?;
    let pops = states
        .iter()
        .map(|s| s.iter().map(|z| z.norm_sqr()).collect())
        .collect();
    PopulationTrace::new(times.to_vec(), PopulationTrace::generic_labels(psi0.dim()), pops)
}

/// `n` evenly spaced points on `[0, t_max]`.
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Default reproduction grid: `Jt` in `[0, 4pi]`, 401 points.
pub fn default_time_grid() -> Vec<f64> {
    time_grid(4.0 * std::f64::consts::PI, 401)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::lattice::{Flux, RhombicLattice, SiteId};

    #[test]
    fn plaquette_zero_flux_closed_form() {
        let h = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap().hamiltonian();
        let psi0 = StateVector::basis(4, 0).unwrap();
        let trace = evolve_unitary(&h, &psi0, &time_grid(4.0 * PI, 201)).unwrap();
        for (t, row) in trace.times.iter().zip(&trace.populations) {
            assert!((row[3] - t.sin().powi(4)).abs() < 1e-10);
            assert!((row[0] - t.cos().powi(4)).abs() < 1e-10);
        }
    }

    #[test]
    fn plaquette_pi_flux_closed_form() {
        let h = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap().hamiltonian();
        let psi0 = StateVector::basis(4, 0).unwrap();
        let trace = evolve_unitary(&h, &psi0, &time_grid(4.0 * PI, 201)).unwrap();
        let w = 2f64.sqrt();
        for (t, row) in trace.times.iter().zip(&trace.populations) {
            assert!(row[3].abs() < 1e-12);
            assert!((row[0] - (w * t).cos().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let h = RhombicLattice::uniform(2, Flux::Pi, 1.0).unwrap().hamiltonian();
        let amps = CVector::from_fn(7, |i, _| C64::new(i as f64, 0.5));
        let psi0 = StateVector::normalized(amps).unwrap();
        let trace = evolve_unitary(&h, &psi0, &[0.0]).unwrap();
        assert_eq!(trace.populations[0], psi0.populations());
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap().hamiltonian();
        let psi = StateVector::basis(7, 0).unwrap();
        assert!(matches!(
            evolve_unitary(&h, &psi, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let psi = StateVector::basis(4, 0).unwrap();
        assert!(evolve_unitary(&h, &psi, &[1.0, 0.5]).is_err());
        assert!(evolve_unitary(&h, &psi, &[-1.0]).is_err());
        assert!(matches!(
            evolve_unitary(&h, &psi, &[f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(StateVector::new(CVector::from_element(2, C64::new(1.0, 0.0))).is_err());
    }

    #[test]
    fn norm_and_energy_conserved() {
        let lat = RhombicLattice::new(3, &[Flux::Pi, Flux::Zero, Flux::Pi], 1.0)
            .unwrap()
            .with_detuning(SiteId::up(2), 0.4)
            .unwrap();
        let h = lat.hamiltonian();
        let amps = CVector::from_fn(10, |i, _| C64::new((i as f64).cos(), (i as f64 * 0.3).sin()));
        let psi0 = StateVector::normalized(amps).unwrap();
        let times = default_time_grid();
        let e0 = h.expectation(psi0.amplitudes());
        for s in evolve_states(&h, &psi0, &times).unwrap() {
            assert!((s.norm() - 1.0).abs() < 1e-9);
            assert!((h.expectation(&s) - e0).abs() < 1e-9 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = default_time_grid();
        assert_eq!(g.len(), 401);
        assert_eq!(g[0], 0.0);
        assert!((g[400] - 4.0 * PI).abs() < 1e-15);
    }
}
