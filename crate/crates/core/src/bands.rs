//! Bloch Hamiltonians, band structures and Wilson-loop Zak phases.
//!
//! Both models use the periodic gauge with every orbital at the cell origin,
//! so `H(k + 2pi) = H(k)` and the Wilson loop closes without an extra phase.
//! The rhombic basis is `(A, up, dn)`, the trimer basis `(-, A, +)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Flux;
use crate::linalg::{CMatrix, CVector, Spectrum};

/// Minimum band separation (units of `J`) for a Zak phase to be defined.
pub const GAP_MIN: f64 = 1e-8;
/// Raw phases within this distance of 0 or pi are snapped.
pub const SNAP_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum BlochModel {
    Rhombic { coupling: f64, flux: Flux },
    Trimer { coupling: f64, delta: f64 },
}

impl BlochModel {
    pub fn rhombic(coupling: f64, flux: Flux) -> Result<Self> {
        check_coupling(coupling)?;
        Ok(Self::Rhombic { coupling, flux })
    }

    pub fn trimer(coupling: f64, delta: f64) -> Result<Self> {
        check_coupling(coupling)?;
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "inter-cell coupling must be nonnegative, got {delta}"
            )));
        }
        Ok(Self::Trimer { coupling, delta })
    }

    pub fn basis_size(&self) -> usize {
        3
    }

    pub fn coupling(&self) -> f64 {
        match *self {
            Self::Rhombic { coupling, .. } | Self::Trimer { coupling, .. } => coupling,
        }
    }

    pub fn matrix(&self, k: f64) -> CMatrix {
        match *self {
            Self::Rhombic { coupling, flux } => rhombic_bloch(k, coupling, flux),
            Self::Trimer { coupling, delta } => trimer_bloch(k, coupling, delta),
        }
    }
}

fn check_coupling(j: f64) -> Result<()> {
    if j.is_finite() && j > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("coupling must be positive, got {j}")))
    }
}

fn hermitian3(a01: C64, a02: C64, a12: C64) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[z, a01, a02, a01.conj(), z, a12, a02.conj(), a12.conj(), z],
    )
}

/// Rhombic Bloch matrix in `(A, up, dn)`:
/// `H[A,up] = -J(1 + e^{-ik})`, `H[A,dn] = -J(1 + e^{i Phi} e^{-ik})`.
pub fn rhombic_bloch(k: f64, coupling: f64, flux: Flux) -> CMatrix {
    let back = C64::from_polar(1.0, -k);
    let phase = C64::from_polar(1.0, flux.radians());
    let one = C64::new(1.0, 0.0);
    hermitian3(
        -(one + back) * coupling,
        -(one + phase * back) * coupling,
        C64::new(0.0, 0.0),
    )
}

/// Trimer Bloch matrix in `(-, A, +)`: `-sqrt2 J` inside the cell and
/// `Delta e^{-ik}` from `+` of one cell to `-` of the next.
pub fn trimer_bloch(k: f64, coupling: f64, delta: f64) -> CMatrix {
    let intra = C64::new(-2f64.sqrt() * coupling, 0.0);
    hermitian3(intra, C64::from_polar(delta, -k), intra)
}

/// `n` points `k_m = -pi + 2 pi m / n`; the grid is periodic so `+pi` is
/// left out.
pub fn k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|m| -PI + 2.0 * PI * m as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub k_grid: Vec<f64>,
    /// `energies[m][b]`, ascending in `b`.
    pub energies: Vec<Vec<f64>>,
}

impl BandStructure {
    pub fn band_count(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn band(&self, b: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[b]).collect()
    }

    pub fn bandwidths(&self) -> Vec<f64> {
        (0..self.band_count())
            .map(|b| {
                let band = self.band(b);
                let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k");
        for b in 1..=self.band_count() {
            write!(out, ",E{b}").unwrap();
        }
        out.push('\n');
        for (k, e) in self.k_grid.iter().zip(&self.energies) {
            write!(out, "{k:.12e}").unwrap();
            for v in e {
                write!(out, ",{v:.12e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn band_structure(model: &BlochModel, n_k: usize) -> Result<BandStructure> {
    if n_k < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 k-points, got {n_k}"
        )));
    }
    let k_grid = k_grid(n_k);
    let energies = k_grid
        .iter()
        .map(|&k| Spectrum::of(&model.matrix(k)).values)
        .collect();
    Ok(BandStructure { k_grid, energies })
}

/// Zak phase of one band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZakPhase {
    pub band: usize,
    /// Wilson-loop phase in `(-pi, pi]`.
    pub raw: f64,
    /// `0` or `pi` when `raw` is within [`SNAP_TOL`], otherwise `None`.
    pub snapped: Option<f64>,
    /// Smallest separation from the neighbouring bands over the grid.
    pub min_gap: f64,
}

impl ZakPhase {
    pub fn value(&self) -> f64 {
        self.snapped.unwrap_or(self.raw)
    }
}

/// Maps any angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn snap(raw: f64) -> Option<f64> {
    if raw.abs() <= SNAP_TOL {
        Some(0.0)
    } else if PI - raw.abs() <= SNAP_TOL {
        Some(PI)
    } else {
        None
    }
}

/// `-arg prod_m <u_m|u_{m+1}>` around a closed loop of states (the last
/// state links back to the first). Independent of the phase of each state.
pub fn wilson_loop_phase(states: &[CVector]) -> f64 {
    let n = states.len();
    let mut prod = C64::new(1.0, 0.0);
    for m in 0..n {
        let link = states[m].dotc(&states[(m + 1) % n]);
        prod *= link / link.norm().max(f64::MIN_POSITIVE);
    }
    wrap_phase(-prod.arg())
}

fn band_gap(values: &[f64], band: usize) -> f64 {
    let below = if band > 0 {
        values[band] - values[band - 1]
    } else {
        f64::INFINITY
    };
    let above = values.get(band + 1).map_or(f64::INFINITY, |v| v - values[band]);
    below.min(above)
}

/// Eigenvectors of one band on the periodic grid, the minimum gap to the
/// neighbouring bands, and where it occurs.
pub fn band_states(model: &BlochModel, band: usize, n_k: usize) -> Result<(Vec<CVector>, f64, f64)> {
    if band >= model.basis_size() {
        return Err(Error::InvalidInput(format!("band index {band} out of range")));
    }
    let mut min_gap = f64::INFINITY;
    let mut worst_k = 0.0;
    let mut states = Vec::with_capacity(n_k);
    for k in k_grid(n_k) {
        let spec = Spectrum::of(&model.matrix(k));
        let gap = band_gap(&spec.values, band);
        if gap < min_gap {
            min_gap = gap;
            worst_k = k;
        }
        states.push(spec.vectors.column(band).into_owned());
    }
    Ok((states, min_gap, worst_k))
}

pub fn zak_phase(model: &BlochModel, band: usize, n_k: usize) -> Result<ZakPhase> {
    if n_k < 64 {
        return Err(Error::InvalidInput(format!(
            "need at least 64 k-points, got {n_k}"
        )));
    }
    let (states, min_gap, k) = band_states(model, band, n_k)?;
    if min_gap <= GAP_MIN * model.coupling() {
        return Err(Error::GapClosure { min_gap, k });
    }
    let raw = wilson_loop_phase(&states);
    Ok(ZakPhase {
        band,
        raw,
        snapped: snap(raw),
        min_gap,
    })
}

/// One row of a Zak sweep over the trimer inter-cell coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZakRecord {
    pub delta_over_sqrt2j: f64,
    pub band: usize,
    pub zak_raw: Option<f64>,
    pub zak_snapped: Option<f64>,
    pub min_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Trimer Zak phase at `Delta = x sqrt2 J` (`J = 1`), with gap closures
/// recorded rather than propagated.
pub fn trimer_zak_record(x: f64, band: usize, n_k: usize) -> Result<ZakRecord> {
    let model = BlochModel::trimer(1.0, x * 2f64.sqrt())?;
    match zak_phase(&model, band, n_k) {
        Ok(z) => Ok(ZakRecord {
            delta_over_sqrt2j: x,
            band,
            zak_raw: Some(z.raw),
            zak_snapped: z.snapped,
            min_gap: z.min_gap,
            error: None,
        }),
        Err(e @ Error::GapClosure { min_gap, .. }) => Ok(ZakRecord {
            delta_over_sqrt2j: x,
            band,
            zak_raw: None,
            zak_snapped: None,
            min_gap,
            error: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{effective_model, PmSite};
    use crate::lattice::RhombicLattice;

    const S2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn pi_flux_bands_are_flat() {
        let b = band_structure(&BlochModel::rhombic(1.0, Flux::Pi).unwrap(), 512).unwrap();
        assert!(b.bandwidths().iter().all(|&w| w < 1e-10));
        for (e, want) in b.energies[0].iter().zip([-2.0, 0.0, 2.0]) {
            assert!((e - want).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_flux_has_one_flat_band() {
        let b = band_structure(&BlochModel::rhombic(1.0, Flux::Zero).unwrap(), 512).unwrap();
        let w = b.bandwidths();
        assert!(w[1] < 1e-10 && w[0] > 1.0 && w[2] > 1.0);
        assert!(b.band(1).iter().all(|e| e.abs() < 1e-10));
        let k0 = b.k_grid.iter().position(|&k| k == 0.0).unwrap();
        assert!((b.energies[k0][2] - 2.0 * S2).abs() < 1e-10);
        assert!((b.energies[k0][0] + 2.0 * S2).abs() < 1e-10);
        let at_pi = Spectrum::of(&rhombic_bloch(PI, 1.0, Flux::Zero)).values;
        assert!(at_pi.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn bloch_matrices_hermitian_and_periodic() {
        for model in [
            BlochModel::rhombic(1.3, Flux::Pi).unwrap(),
            BlochModel::rhombic(0.7, Flux::Zero).unwrap(),
            BlochModel::trimer(1.0, 0.9).unwrap(),
        ] {
            for k in k_grid(17) {
                let m = model.matrix(k);
                assert!((&m - m.adjoint()).norm() < 1e-14);
                assert!((&m - model.matrix(k + 2.0 * PI)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_trimer_is_flat() {
        let b = band_structure(&BlochModel::trimer(1.0, 0.0).unwrap(), 64).unwrap();
        assert!(b.bandwidths().iter().all(|&w| w < 1e-12));
        for (e, want) in b.energies[0].iter().zip([-2.0, 0.0, 2.0]) {
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zak_jumps_across_uniform_chain_point() {
        for x in [0.2, 0.5, 0.8] {
            let z = trimer_zak_record(x, 0, 512).unwrap();
            assert_eq!(z.zak_snapped, Some(0.0), "{x}: {z:?}");
        }
        for x in [1.2, 1.5, 2.0] {
            let z = trimer_zak_record(x, 0, 512).unwrap();
            assert_eq!(z.zak_snapped, Some(PI), "{x}: {z:?}");
        }
    }

    #[test]
    fn gap_closure_detected() {
        let m = BlochModel::trimer(1.0, S2).unwrap();
        assert!(matches!(zak_phase(&m, 0, 512), Err(Error::GapClosure { .. })));
        let r = trimer_zak_record(1.0, 0, 512).unwrap();
        assert!(r.error.is_some() && r.zak_raw.is_none());
        let m = BlochModel::rhombic(1.0, Flux::Zero).unwrap();
        assert!(matches!(zak_phase(&m, 1, 128), Err(Error::GapClosure { .. })));
    }

    #[test]
    fn grid_converged() {
        for x in [0.5, 1.5] {
            let m = BlochModel::trimer(1.0, x * S2).unwrap();
            let a = zak_phase(&m, 0, 256).unwrap().raw;
            let b = zak_phase(&m, 0, 512).unwrap().raw;
            assert!(wrap_phase(a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn rejects_small_grids() {
        let m = BlochModel::trimer(1.0, 0.5).unwrap();
        assert!(zak_phase(&m, 0, 32).is_err());
        assert!(band_structure(&m, 2).is_err());
        assert!(BlochModel::trimer(1.0, -0.1).is_err());
    }

    #[test]
    fn open_lattice_eigenvalues_lie_on_flat_bands() {
        let lat = RhombicLattice::uniform(10, Flux::Pi, 1.0).unwrap();
        let allowed = [0.0, S2, -S2, 2.0, -2.0];
        for e in lat.hamiltonian().eigenvalues() {
            assert!(allowed.iter().any(|a| (e - a).abs() < 1e-9), "{e}");
        }
    }

    #[test]
    fn trimer_ring_matches_effective_model() {
        // Read the couplings off the real-space mapping, close the chain
        // into a ring of 8 cells, and compare with the Bloch spectra.
        let delta = 0.6;
        let lat = RhombicLattice::uniform(9, Flux::Pi, 1.0)
            .unwrap()
            .with_antisymmetric_detuning(delta)
            .unwrap();
        let model = effective_model(&lat, delta).unwrap();
        let coupling = |a: PmSite, b: PmSite| {
            let ia = model.sites.iter().position(|&s| s == a).unwrap();
            let ib = model.sites.iter().position(|&s| s == b).unwrap();
            model
                .couplings
                .iter()
                .find(|&&(i, j, _)| (i, j) == (ia, ib) || (i, j) == (ib, ia))
                .map(|c| c.2)
                .unwrap()
        };
        let minus_a = coupling(PmSite::Minus(1), PmSite::A(2));
        let a_plus = coupling(PmSite::A(2), PmSite::Plus(2));
        let plus_minus = coupling(PmSite::Plus(2), PmSite::Minus(2));
        assert!((minus_a + S2).abs() < 1e-12 && (a_plus + S2).abs() < 1e-12);
        assert!((plus_minus - delta).abs() < 1e-12);

        let cells = 8;
        let mut ring = CMatrix::zeros(3 * cells, 3 * cells);
        let mut set = |i: usize, j: usize, v: f64| {
            ring[(i, j)] = C64::new(v, 0.0);
            ring[(j, i)] = C64::new(v, 0.0);
        };
        for c in 0..cells {
            set(3 * c, 3 * c + 1, minus_a);
            set(3 * c + 1, 3 * c + 2, a_plus);
            set(3 * c + 2, (3 * (c + 1)) % (3 * cells), plus_minus);
        }
        let mut real = Spectrum::of(&ring).values;
        let bloch = BlochModel::trimer(1.0, delta).unwrap();
        let mut from_k: Vec<f64> = (0..cells)
            .flat_map(|m| Spectrum::of(&bloch.matrix(2.0 * PI * m as f64 / cells as f64)).values)
            .collect();
        real.sort_by(f64::total_cmp);
        from_k.sort_by(f64::total_cmp);
        for (a, b) in real.iter().zip(&from_k) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_layout() {
        let b = band_structure(&BlochModel::rhombic(1.0, Flux::Pi).unwrap(), 4).unwrap();
        let csv = b.to_csv();
        assert!(csv.starts_with("k,E1,E2,E3\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
