//! Adiabatic preparation of the single-excitation ground state.
//!
//! The schedule starts from decoupled qubits with the initial site pulled
//! well below the others, so `|1_init>` is the ground state; the ramp then
//! turns the couplings on and brings the detuning back to zero.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::RampSchedule;
use crate::dynamics::time_grid;
use crate::error::{Error, Result};
use crate::lattice::{RhombicLattice, SiteId};
use crate::linalg::{basis_vector, CMatrix, CVector, Spectrum};
use crate::open_system::{
    augment_with_vacuum, fidelity, integrate, DensityMatrix, DephasingRates, LindbladOptions, STEP_SCALE,
};
use crate::trace::PopulationTrace;

/// Gaps below this (units of `J`) along the ramp are reported as crossings.
pub const GAP_WARN: f64 = 1e-6;
/// Initial-site detuning must sit this many `J` below every other site.
const MIN_INIT_OFFSET: f64 = 3.0;
const ENDPOINT_TOL: f64 = 1e-9;
const DEGENERACY_TOL: f64 = 1e-9;
const DEFAULT_SAMPLES: usize = 201;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdiabaticResult {
    /// Site populations along the ramp.
    pub trace: PopulationTrace,
    /// Weight in the instantaneous ground space at each sample time.
    pub ground_overlap: Vec<f64>,
    pub final_populations: Vec<f64>,
    /// Populations of the ground state reached from `|1_init>`.
    pub target_populations: Vec<f64>,
    /// `<psi|P_gs|psi>` at the end of the ramp.
    pub final_overlap: f64,
    /// Population fidelity `sum_i sqrt(n_i n_i^th)` at the end.
    pub fidelity: f64,
    /// Smallest `E_1 - E_0` seen before the final sample.
    pub min_gap: f64,
}

/// Runs the ramp with 201 evenly spaced samples.
pub fn adiabatic_prepare(
    lattice_final: &RhombicLattice,
    schedule: &RampSchedule,
    init_site: SiteId,
    rates: Option<&DephasingRates>,
) -> Result<AdiabaticResult> {
    adiabatic_prepare_with(lattice_final, schedule, init_site, rates, DEFAULT_SAMPLES)
}

pub fn adiabatic_prepare_with(
    lattice_final: &RhombicLattice,
    schedule: &RampSchedule,
    init_site: SiteId,
    rates: Option<&DephasingRates>,
    samples: usize,
) -> Result<AdiabaticResult> {
    schedule.validate()?;
    let n = lattice_final.site_count();
    let init = lattice_final.checked_index(init_site)?;
    check_endpoints(lattice_final, schedule, init)?;
    if let Some(r) = rates {
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: r.len(),
            });
        }
    }

    let j_final = lattice_final.coupling();
    let mut hopping = lattice_final.hamiltonian().into_inner();
    for i in 0..n {
        hopping[(i, i)] = C64::new(0.0, 0.0);
    }
    hopping /= C64::new(j_final, 0.0);
    let h_at = |t: f64| {
        let (j, d) = schedule.at(t);
        let mut h = &hopping * C64::new(j, 0.0);
        for (i, v) in d.iter().enumerate() {
            h[(i, i)] += C64::new(*v, 0.0);
        }
        h
    };
    let bound = norm_bound(&hopping, schedule);

    let total = schedule.total_duration();
    let times = if total > 0.0 {
        time_grid(total, samples.max(2))
    } else {
        vec![0.0]
    };
    let psi0 = basis_vector(n, init);

    let (populations, ground_overlap): (Vec<Vec<f64>>, Vec<f64>) = match rates {
        None => {
            let states = evolve_closed(&h_at, bound, &psi0, &times);
            let pops = states
                .iter()
                .map(|s| s.iter().map(|z| z.norm_sqr()).collect())
                .collect::<Vec<Vec<f64>>>();
            let overlap = states
                .iter()
                .zip(&times)
                .map(|(s, &t)| {
                    let p = ground_space(&h_at(t)).0;
                    (s.adjoint() * p * s)[(0, 0)].re
                })
                .collect();
            (pops, overlap)
        }
        Some(r) => {
            let rho0 = DensityMatrix::from_single_excitation(&psi0)?;
            let (states, _) = integrate(
                |t| augment_with_vacuum(&h_at(t)),
                bound,
                r,
                &rho0,
                &times,
                &LindbladOptions::default(),
            )?;
            let pops = states.iter().map(DensityMatrix::site_populations).collect();
            let overlap = states
                .iter()
                .zip(&times)
                .map(|(rho, &t)| rho.expectation_single_excitation(&ground_space(&h_at(t)).0))
                .collect();
            (pops, overlap)
        }
    };

    let mut min_gap = f64::INFINITY;
    let interior = if times.len() > 1 {
        &times[..times.len() - 1]
    } else {
        &times[..]
    };
    for &t in interior {
        let gap = ground_space(&h_at(t)).1;
        if gap < GAP_WARN {
            log::warn!("near level crossing at Jt = {t}: gap {gap:e}");
        }
        min_gap = min_gap.min(gap);
    }

    let (p_final, _) = ground_space(&h_at(total));
    let projected = &p_final * &psi0;
    let weight = projected.norm_squared();
    if weight < 1e-12 {
        return Err(Error::InvalidInput(
            "initial site has no overlap with the final ground space".into(),
        ));
    }
    let target_populations: Vec<f64> = projected.iter().map(|z| z.norm_sqr() / weight).collect();
    let final_populations = populations.last().cloned().unwrap_or_default();
    let fid = fidelity(&final_populations, &target_populations)?;
    let final_overlap = *ground_overlap.last().unwrap_or(&0.0);
    let trace = PopulationTrace::new(times, PopulationTrace::site_labels(n), populations)?;
    Ok(AdiabaticResult {
        trace,
        ground_overlap,
        final_populations,
        target_populations,
        final_overlap,
        fidelity: fid,
        min_gap,
    })
}

fn check_endpoints(lattice: &RhombicLattice, schedule: &RampSchedule, init: usize) -> Result<()> {
    let n = lattice.site_count();
    if schedule.site_count() != n {
        return Err(Error::InvalidSchedule(format!(
            "schedule has {} detuning entries, lattice has {n} sites",
            schedule.site_count()
        )));
    }
    let j_final = lattice.coupling();
    let (j0, d0) = schedule.initial();
    if j0.abs() > ENDPOINT_TOL {
        return Err(Error::InvalidSchedule(format!(
            "schedule must start with couplings off, got J = {j0}"
        )));
    }
    let others = d0
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != init)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    if others.is_finite() && others - d0[init] <= MIN_INIT_OFFSET * j_final {
        return Err(Error::InvalidSchedule(format!(
            "initial site must start more than {MIN_INIT_OFFSET} J below the others \
             (offset {})",
            others - d0[init]
        )));
    }
    let (j1, d1) = schedule.terminal();
    let mismatch = d1
        .iter()
        .zip(lattice.detunings())
        .map(|(a, b)| (a - b).abs())
        .fold((j1 - j_final).abs(), f64::max);
    if mismatch > ENDPOINT_TOL * j_final.max(1.0) {
        return Err(Error::InvalidSchedule(format!(
            "schedule does not end at the target Hamiltonian (mismatch {mismatch})"
        )));
    }
    Ok(())
}

/// Row-sum bound on `|H(t)|`; endpoints suffice because the ramp is linear.
fn norm_bound(hopping: &CMatrix, schedule: &RampSchedule) -> f64 {
    let rows = hopping
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    schedule
        .segments
        .iter()
        .flat_map(|s| [(s.j_start, &s.delta_start), (s.j_end, &s.delta_end)])
        .map(|(j, d)| j.abs() * rows + d.iter().map(|x| x.abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Projector on the lowest eigenspace and the gap `E_1 - E_0`.
fn ground_space(h: &CMatrix) -> (CMatrix, f64) {
    let spec = Spectrum::of(h);
    let scale = spec.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let gap = if spec.dim() > 1 {
        spec.values[1] - spec.values[0]
    } else {
        f64::INFINITY
    };
    (spec.ground_projector(DEGENERACY_TOL * scale), gap)
}

fn evolve_closed<F>(h_at: &F, bound: f64, psi0: &CVector, times: &[f64]) -> Vec<CVector>
where
    F: Fn(f64) -> CMatrix,
{
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |h: &CMatrix, psi: &CVector| (h * psi) * minus_i;
    let h_max = if bound > 0.0 {
        STEP_SCALE / bound
    } else {
        f64::INFINITY
    };
    let mut psi = psi0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = if h_max.is_finite() {
                (span / h_max).ceil().max(1.0) as usize
            } else {
                1
            };
            let h = span / steps as f64;
            for k in 0..steps {
                let t0 = t + k as f64 * h;
                let (h0, hm, h1) = (h_at(t0), h_at(t0 + h / 2.0), h_at(t0 + h));
                let k1 = rhs(&h0, &psi);
                let k2 = rhs(&hm, &(&psi + &k1 * C64::new(h / 2.0, 0.0)));
                let k3 = rhs(&hm, &(&psi + &k2 * C64::new(h / 2.0, 0.0)));
                let k4 = rhs(&h1, &(&psi + &k3 * C64::new(h, 0.0)));
                psi += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
            }
            t = target;
        }
        out.push(psi.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Flux;

    fn schedule(total: f64) -> RampSchedule {
        RampSchedule::two_stage(4, 0, -4.0, 1.0, total / 2.0, total / 2.0).unwrap()
    }

    #[test]
    fn closed_ramp_reaches_ground_state() {
        for flux in [Flux::Zero, Flux::Pi] {
            let lat = RhombicLattice::uniform(1, flux, 1.0).unwrap();
            let r = adiabatic_prepare(&lat, &schedule(30.0), SiteId::a(1), None).unwrap();
            assert!(r.final_overlap > 0.99, "{flux}: {}", r.final_overlap);
            assert!((r.ground_overlap[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_flux_target_is_unequal() {
        let lat = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap();
        let r = adiabatic_prepare(&lat, &schedule(30.0), SiteId::a(1), None).unwrap();
        let expect = [0.5, 0.25, 0.25, 0.0];
        for (a, b) in r.target_populations.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in r.final_populations.iter().zip(expect) {
            assert!((a - b).abs() < 0.02);
        }
    }

    #[test]
    fn zero_duration_leaves_state() {
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        let r = adiabatic_prepare(&lat, &schedule(0.0), SiteId::a(1), None).unwrap();
        assert_eq!(r.final_populations, vec![1.0, 0.0, 0.0, 0.0]);
        // Zero-flux ground state is (A1 + up + dn + A2)/2-like with weight 1/4 on A1.
        let gs = Spectrum::of(lat.hamiltonian().entries());
        let w = gs.vectors[(0, 0)].norm_sqr();
        assert!((r.final_overlap - w).abs() < 1e-12);
    }

    #[test]
    fn dephasing_lowers_fidelity() {
        let lat = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap();
        let s = schedule(30.0);
        let clean = adiabatic_prepare(&lat, &s, SiteId::a(1), None).unwrap();
        let noisy = adiabatic_prepare(
            &lat,
            &s,
            SiteId::a(1),
            Some(&DephasingRates::uniform(4, 0.05).unwrap()),
        )
        .unwrap();
        assert!(noisy.fidelity < clean.fidelity);
        let zero = adiabatic_prepare(&lat, &s, SiteId::a(1), Some(&DephasingRates::zero(4))).unwrap();
        assert!((zero.final_overlap - clean.final_overlap).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_schedules() {
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        let shallow = RampSchedule::two_stage(4, 0, -2.0, 1.0, 5.0, 5.0).unwrap();
        assert!(adiabatic_prepare(&lat, &shallow, SiteId::a(1), None).is_err());
        let weak = RampSchedule::two_stage(4, 0, -4.0, 0.5, 5.0, 5.0).unwrap();
        assert!(adiabatic_prepare(&lat, &weak, SiteId::a(1), None).is_err());
        let wrong_site = schedule(10.0);
        assert!(adiabatic_prepare(&lat, &wrong_site, SiteId::a(2), None).is_err());
    }
}
