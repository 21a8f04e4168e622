//! Exact effective models of the rhombic lattice in the Bell-pair basis.
//!
//! With the default gauge every `A_j` couples to `|+_j>` with `-sqrt(2) J`.
//! `A_{j+1}` couples to `|+_j>` (zero flux) or to `|-_j>` (pi flux) with the
//! same strength. An anti-symmetric detuning `+D` on Up, `-D` on Down becomes
//! a `D` coupling between `|+_j>` and `|-_j>`.
//!
//! For pi flux the sites arrange into cells `{-_{j-1}, A_j, +_j}` with
//! intra-cell coupling `sqrt(2) J` and inter-cell coupling `D`; the edges
//! are the pairs `{A_1, +_1}` and `{-_l, A_{l+1}}`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::basis::{PmBasis, PmSite};
use super::{evolve_states, StateVector};
use crate::error::{Error, Result};
use crate::lattice::{Bond, Flux, Rail, RhombicLattice};
use crate::linalg::{CMatrix, CVector, HermitianOperator};

const MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Homogeneous `sqrt(2) J` chain (zero flux without detuning, or pi flux
    /// with `D = sqrt(2) J`).
    Chain,
    /// Zero-flux chain with `|-_j>` sites hanging off `|+_j>` through `D`.
    Comb,
    /// Pi flux without detuning: disjoint 3-site bulk and 2-site edge blocks.
    Blocks,
    /// Pi flux with generic `D`: trimer lattice.
    Trimer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveModel {
    pub kind: ModelKind,
    /// All `3l + 1` transformed-basis sites, ordered along the model
    /// (chain/trimer path first, then any decoupled or dangling sites).
    pub sites: Vec<PmSite>,
    /// `(i, j, strength)` with indices into `sites`.
    pub couplings: Vec<(usize, usize, f64)>,
    /// `+1/-1` per lattice site such that flipping those sites brings the
    /// lattice to the default gauge.
    gauge: Vec<f64>,
}

impl EffectiveModel {
    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        let n = self.dim();
        let mut h = CMatrix::zeros(n, n);
        for &(i, j, v) in &self.couplings {
            h[(i, j)] += C64::new(v, 0.0);
            h[(j, i)] += C64::new(v, 0.0);
        }
        HermitianOperator::new(h).expect("real symmetric by construction")
    }

    /// Connected components (in model order) of the coupling graph.
    pub fn components(&self) -> Vec<Vec<PmSite>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j, v) in &self.couplings {
            if v != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<PmSite>> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(self.sites[i]);
        }
        groups.into_values().collect()
    }

    /// Maps a transformed-basis vector into model order.
    fn gather(&self, pm: &CVector) -> CVector {
        CVector::from_fn(self.dim(), |k, _| pm[self.sites[k].index()])
    }

    /// Maps a model-order vector back to the transformed basis.
    fn scatter(&self, model: &CVector) -> CVector {
        let mut pm = CVector::zeros(self.dim());
        for (k, site) in self.sites.iter().enumerate() {
            pm[site.index()] = model[k];
        }
        pm
    }

    fn apply_gauge(&self, v: &CVector) -> CVector {
        CVector::from_fn(v.len(), |i, _| v[i] * self.gauge[i])
    }

    /// Lattice-basis state to model coordinates.
    pub fn embed(&self, psi: &CVector) -> Result<CVector> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: psi.len(),
            });
        }
        Ok(self.gather(&self.apply_gauge(psi).to_pm()?))
    }

    /// Model coordinates back to the lattice basis.
    pub fn unembed(&self, model: &CVector) -> Result<CVector> {
        Ok(self.apply_gauge(&self.scatter(model).from_pm()?))
    }
}

/// Site signs `s_i` with `s_i s_k sign_ik` equal to the default gauge on
/// every bond. Requires all scales to be 1.
fn gauge_to_default(lattice: &RhombicLattice) -> Result<Vec<f64>> {
    let reference = RhombicLattice::new(lattice.plaquettes(), &lattice.fluxes(), 1.0)?;
    if lattice.bonds().iter().any(|b| b.magnitude_scale != 1.0) {
        return Err(Error::InvalidInput(
            "effective model needs homogeneous coupling magnitudes".into(),
        ));
    }
    let n = lattice.site_count();
    let mut s = vec![0.0; n];
    s[0] = 1.0;
    let rel = |b: &Bond, r: &Bond| -> f64 {
        if b.sign == r.sign {
            1.0
        } else {
            -1.0
        }
    };
    for (chunk, ref_chunk) in lattice.bonds().chunks(4).zip(reference.bonds().chunks(4)) {
        // chunk order: A_j-up, A_j-dn, A_{j+1}-up, A_{j+1}-dn
        let a = s[chunk[0].from.index()];
        let up = chunk[0].to.index();
        let dn = chunk[1].to.index();
        s[up] = a * rel(&chunk[0], &ref_chunk[0]);
        s[dn] = a * rel(&chunk[1], &ref_chunk[1]);
        let next = chunk[2].from.index();
        s[next] = s[up] * rel(&chunk[2], &ref_chunk[2]);
        debug_assert_eq!(s[next] * s[dn] * rel(&chunk[3], &ref_chunk[3]), 1.0);
    }
    Ok(s)
}

fn check_antisymmetric(lattice: &RhombicLattice, delta: f64) -> Result<()> {
    let tol = MATCH_TOL * delta.abs().max(lattice.coupling()).max(1.0);
    for site in lattice.sites() {
        let want = match site.rail {
            Rail::A => 0.0,
            Rail::Up => delta,
            Rail::Down => -delta,
        };
        let got = lattice.detunings()[site.index()];
        if (got - want).abs() > tol {
            return Err(Error::NotAntiSymmetric(format!(
                "site {site} has detuning {got}, expected {want}"
            )));
        }
    }
    Ok(())
}

/// Builds the exact effective model of a uniform-flux lattice carrying an
/// anti-symmetric detuning `delta_antisym` (`+D` Up, `-D` Down).
pub fn effective_model(lattice: &RhombicLattice, delta_antisym: f64) -> Result<EffectiveModel> {
    lattice.validate()?;
    let flux = lattice.uniform_flux().ok_or(Error::MixedFlux)?;
    check_antisymmetric(lattice, delta_antisym)?;
    let gauge = gauge_to_default(lattice)?;

    let l = lattice.plaquettes();
    let j = lattice.coupling();
    let t = -std::f64::consts::SQRT_2 * j;
    let d = delta_antisym;

    let mut sites = Vec::with_capacity(3 * l + 1);
    let mut couplings = Vec::new();
    let kind = match flux {
        Flux::Zero => {
            // A1 +1 A2 +2 ... A_{l+1}, then -1 .. -l
            for c in 1..=l {
                sites.push(PmSite::A(c));
                sites.push(PmSite::Plus(c));
            }
            sites.push(PmSite::A(l + 1));
            for c in 1..=l {
                sites.push(PmSite::Minus(c));
            }
            for c in 0..l {
                let (a, p, a_next) = (2 * c, 2 * c + 1, 2 * c + 2);
                couplings.push((a, p, t));
                couplings.push((p, a_next, t));
                if d != 0.0 {
                    couplings.push((p, 2 * l + 1 + c, d));
                }
            }
            if d == 0.0 {
                ModelKind::Chain
            } else {
                ModelKind::Comb
            }
        }
        Flux::Pi => {
            // A1 +1 -1 A2 +2 -2 ... A_{l+1}
            for c in 1..=l {
                sites.push(PmSite::A(c));
                sites.push(PmSite::Plus(c));
                sites.push(PmSite::Minus(c));
            }
            sites.push(PmSite::A(l + 1));
            for c in 0..l {
                let (a, p, m, a_next) = (3 * c, 3 * c + 1, 3 * c + 2, 3 * c + 3);
                couplings.push((a, p, t));
                if d != 0.0 {
                    couplings.push((p, m, d));
                }
                couplings.push((m, a_next, t));
            }
            if d == 0.0 {
                ModelKind::Blocks
            } else if (d.abs() - t.abs()).abs() <= MATCH_TOL * t.abs().max(1.0) {
                ModelKind::Chain
            } else {
                ModelKind::Trimer
            }
        }
    };
    Ok(EffectiveModel {
        kind,
        sites,
        couplings,
        gauge,
    })
}

/// Evolves `psi0` under the full lattice Hamiltonian and under the
/// effective model, maps the latter back to lattice sites, and returns the
/// largest population difference over all sites and times.
pub fn verify_equivalence(
    lattice: &RhombicLattice,
    delta_antisym: f64,
    psi0: &StateVector,
    times: &[f64],
) -> Result<f64> {
    let model = effective_model(lattice, delta_antisym)?;
    let full = evolve_states(&lattice.hamiltonian(), psi0, times)?;
    let psi_model = StateVector::new(model.embed(psi0.amplitudes())?)?;
    let reduced = evolve_states(&model.hamiltonian(), &psi_model, times)?;
    let mut worst = 0.0f64;
    for (a, b) in full.iter().zip(&reduced) {
        let back = model.unembed(b)?;
        for (x, y) in a.iter().zip(back.iter()) {
            worst = worst.max((x.norm_sqr() - y.norm_sqr()).abs());
        }
    }
    Ok(worst)
}
