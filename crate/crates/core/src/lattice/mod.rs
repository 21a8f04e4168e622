//! Rhombic (diamond-chain) lattice topology and its single-excitation
//! Hamiltonian.
//!
//! Sites are labelled `(A, j)` for `j = 1..=l+1` and `(Up, j)`, `(Down, j)`
//! for `j = 1..=l`. The flat index order is
//! `(A,1), (Up,1), (Down,1), (A,2), (Up,2), (Down,2), ..., (A,l+1)`, so a
//! lattice with `l` plaquettes has `3l + 1` sites.
//!
//! Each plaquette `j` is closed by four bonds, stored in the order
//! `A_j-Up_j, A_j-Down_j, A_{j+1}-Up_j, A_{j+1}-Down_j`. A bond's sign is the
//! sign of the physical coupling, so the matrix element is `sign * scale * J`
//! and its phase is `0` for `Plus` and `pi` for `Minus`.

pub(crate) mod file;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator};

pub use file::{DephasingSpec, FluxValue, LatticeFile, SCHEMA_VERSION};

const FLUX_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rail {
    A,
    Up,
    Down,
}

impl Rail {
    fn offset(self) -> usize {
        match self {
            Rail::A => 0,
            Rail::Up => 1,
            Rail::Down => 2,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Rail::A => "A",
            Rail::Up => "up",
            Rail::Down => "dn",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SiteId {
    pub rail: Rail,
    pub cell: usize,
}

impl SiteId {
    pub const fn new(rail: Rail, cell: usize) -> Self {
        Self { rail, cell }
    }

    pub const fn a(cell: usize) -> Self {
        Self::new(Rail::A, cell)
    }

    pub const fn up(cell: usize) -> Self {
        Self::new(Rail::Up, cell)
    }

    pub const fn down(cell: usize) -> Self {
        Self::new(Rail::Down, cell)
    }

    pub fn is_valid(&self, plaquettes: usize) -> bool {
        match self.rail {
            Rail::A => (1..=plaquettes + 1).contains(&self.cell),
            Rail::Up | Rail::Down => (1..=plaquettes).contains(&self.cell),
        }
    }

    pub fn index(&self) -> usize {
        3 * (self.cell - 1) + self.rail.offset()
    }

    pub fn from_index(index: usize) -> Self {
        let rail = match index % 3 {
            0 => Rail::A,
            1 => Rail::Up,
            _ => Rail::Down,
        };
        Self::new(rail, index / 3 + 1)
    }

    /// Column label used in trace files, e.g. `n_A1`, `n_up2`.
    pub fn column_name(&self) -> String {
        format!("n_{}{}", self.rail.short_name(), self.cell)
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.rail.short_name(), self.cell)
    }
}

impl FromStr for SiteId {
    type Err = Error;

    /// Accepts `A,1`, `up,2`, `dn,1`, `down,1`, and the arrow forms.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse site label {s:?}"));
        let (rail, cell) = s.split_once(',').ok_or_else(bad)?;
        let rail = match rail.trim().to_ascii_lowercase().as_str() {
            "a" => Rail::A,
            "up" | "u" | "↑" => Rail::Up,
            "dn" | "down" | "d" | "↓" => Rail::Down,
            _ => return Err(bad()),
        };
        let cell: usize = cell.trim().parse().map_err(|_| bad())?;
        if cell == 0 {
            return Err(bad());
        }
        Ok(Self::new(rail, cell))
    }
}

/// Number of sites for `l` plaquettes.
pub fn site_count(plaquettes: usize) -> usize {
    3 * plaquettes + 1
}

pub fn sites(plaquettes: usize) -> impl Iterator<Item = SiteId> {
    (0..site_count(plaquettes)).map(SiteId::from_index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondSign {
    Plus,
    Minus,
}

impl BondSign {
    pub fn value(self) -> f64 {
        match self {
            BondSign::Plus => 1.0,
            BondSign::Minus => -1.0,
        }
    }

    pub fn phase(self) -> f64 {
        match self {
            BondSign::Plus => 0.0,
            BondSign::Minus => PI,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BondSign::Plus => BondSign::Minus,
            BondSign::Minus => BondSign::Plus,
        }
    }
}

/// Plaquette flux; only `0` and `pi` are realizable with real couplings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flux {
    Zero,
    Pi,
}

impl Flux {
    pub fn from_radians(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidFlux(phi));
        }
        let r = phi.rem_euclid(2.0 * PI);
        if r < FLUX_TOL || 2.0 * PI - r < FLUX_TOL {
            Ok(Flux::Zero)
        } else if (r - PI).abs() < FLUX_TOL {
            Ok(Flux::Pi)
        } else {
            Err(Error::InvalidFlux(phi))
        }
    }

    pub fn radians(self) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::Pi => PI,
        }
    }
}

impl fmt::Display for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flux::Zero => f.write_str("0"),
            Flux::Pi => f.write_str("pi"),
        }
    }
}

impl FromStr for Flux {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "zero" => Ok(Flux::Zero),
            "pi" | "π" => Ok(Flux::Pi),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("cannot parse flux {s:?}")))
                .and_then(Flux::from_radians),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub from: SiteId,
    pub to: SiteId,
    pub sign: BondSign,
    pub magnitude_scale: f64,
}

impl Bond {
    fn is_rhombic(&self) -> bool {
        self.from.rail == Rail::A
            && self.to.rail != Rail::A
            && (self.from.cell == self.to.cell || self.from.cell == self.to.cell + 1)
    }
}

/// Bonds of plaquette `j` in canonical order.
fn plaquette_bond_sites(j: usize) -> [(SiteId, SiteId); 4] {
    [
        (SiteId::a(j), SiteId::up(j)),
        (SiteId::a(j), SiteId::down(j)),
        (SiteId::a(j + 1), SiteId::up(j)),
        (SiteId::a(j + 1), SiteId::down(j)),
    ]
}

/// Index into the bond list of the bond carrying the pi phase in the
/// default gauge (`A_{j+1}-Down_j`).
const DEFAULT_GAUGE_SLOT: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhombicLattice {
    plaquettes: usize,
    bonds: Vec<Bond>,
    detunings: Vec<f64>,
    coupling: f64,
}

impl RhombicLattice {
    /// Homogeneous lattice with the default gauge: every coupling negative,
    /// except the `A_{j+1}-Down_j` bond of each pi-flux plaquette.
    pub fn new(plaquettes: usize, fluxes: &[Flux], coupling: f64) -> Result<Self> {
        if plaquettes == 0 {
            return Err(Error::InvalidLattice("need at least one plaquette".into()));
        }
        if fluxes.len() != plaquettes {
            return Err(Error::InvalidLattice(format!(
                "{} fluxes given for {} plaquettes",
                fluxes.len(),
                plaquettes
            )));
        }
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(Error::InvalidLattice(format!(
                "coupling magnitude must be finite and >= 0, got {coupling}"
            )));
        }
        let mut bonds = Vec::with_capacity(4 * plaquettes);
        for (j, flux) in (1..=plaquettes).zip(fluxes) {
            for (slot, (from, to)) in plaquette_bond_sites(j).into_iter().enumerate() {
                let sign = if *flux == Flux::Pi && slot == DEFAULT_GAUGE_SLOT {
                    BondSign::Plus
                } else {
                    BondSign::Minus
                };
                bonds.push(Bond {
                    from,
                    to,
                    sign,
                    magnitude_scale: 1.0,
                });
            }
        }
        Ok(Self {
            plaquettes,
            bonds,
            detunings: vec![0.0; site_count(plaquettes)],
            coupling,
        })
    }

    /// Uniform flux on every plaquette.
    pub fn uniform(plaquettes: usize, flux: Flux, coupling: f64) -> Result<Self> {
        Self::new(plaquettes, &vec![flux; plaquettes], coupling)
    }

    pub fn with_detuning(mut self, site: SiteId, value: f64) -> Result<Self> {
        let idx = self.checked_index(site)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("detuning"));
        }
        self.detunings[idx] = value;
        Ok(self)
    }

    pub fn with_detunings(mut self, values: &BTreeMap<SiteId, f64>) -> Result<Self> {
        for (&site, &v) in values {
            self = self.with_detuning(site, v)?;
        }
        Ok(self)
    }

    /// Sets `+delta` on every Up site and `-delta` on every Down site,
    /// leaving the A rail at zero.
    pub fn with_antisymmetric_detuning(mut self, delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::NonFinite("detuning"));
        }
        for site in sites(self.plaquettes) {
            self.detunings[site.index()] = match site.rail {
                Rail::A => 0.0,
                Rail::Up => delta,
                Rail::Down => -delta,
            };
        }
        Ok(self)
    }

    /// Replaces all bond signs (canonical bond order). Plaquette fluxes are
    /// whatever the new signs imply.
    pub fn with_bond_signs(mut self, signs: &[BondSign]) -> Result<Self> {
        if signs.len() != self.bonds.len() {
            return Err(Error::InvalidLattice(format!(
                "expected {} bond signs, got {}",
                self.bonds.len(),
                signs.len()
            )));
        }
        for (b, &s) in self.bonds.iter_mut().zip(signs) {
            b.sign = s;
        }
        Ok(self)
    }

    pub fn with_bond_scales(mut self, scales: &[f64]) -> Result<Self> {
        if scales.len() != self.bonds.len() {
            return Err(Error::InvalidLattice(format!(
                "expected {} bond scales, got {}",
                self.bonds.len(),
                scales.len()
            )));
        }
        if scales.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidLattice(
                "bond scales must be finite and >= 0".into(),
            ));
        }
        for (b, &s) in self.bonds.iter_mut().zip(scales) {
            b.magnitude_scale = s;
        }
        Ok(self)
    }

    /// Local gauge transformation `|site> -> -|site>`: flips every bond
    /// touching `site`. Leaves all plaquette fluxes unchanged.
    pub fn gauge_flip(mut self, site: SiteId) -> Result<Self> {
        self.checked_index(site)?;
        for b in self.bonds.iter_mut() {
            if b.from == site || b.to == site {
                b.sign = b.sign.flipped();
            }
        }
        Ok(self)
    }

    pub fn with_coupling(mut self, coupling: f64) -> Result<Self> {
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(Error::InvalidLattice(format!(
                "coupling magnitude must be finite and >= 0, got {coupling}"
            )));
        }
        self.coupling = coupling;
        Ok(self)
    }

    pub fn plaquettes(&self) -> usize {
        self.plaquettes
    }

    pub fn site_count(&self) -> usize {
        site_count(self.plaquettes)
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteId> {
        sites(self.plaquettes)
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn detuning(&self, site: SiteId) -> Result<f64> {
        Ok(self.detunings[self.checked_index(site)?])
    }

    pub fn checked_index(&self, site: SiteId) -> Result<usize> {
        if site.is_valid(self.plaquettes) {
            Ok(site.index())
        } else {
            Err(Error::InvalidInput(format!(
                "site {site} not in lattice with {} plaquettes",
                self.plaquettes
            )))
        }
    }

    /// Sum of the four bond phases around plaquette `j` (1-based), mod 2pi.
    pub fn plaquette_flux(&self, j: usize) -> Result<Flux> {
        if j == 0 || j > self.plaquettes {
            return Err(Error::PlaquetteOutOfRange {
                index: j,
                count: self.plaquettes,
            });
        }
        let phase: f64 = self.bonds[4 * (j - 1)..4 * j]
            .iter()
            .map(|b| b.sign.phase())
            .sum();
        Flux::from_radians(phase)
    }

    pub fn fluxes(&self) -> Vec<Flux> {
        (1..=self.plaquettes)
            .map(|j| self.plaquette_flux(j).expect("index in range"))
            .collect()
    }

    /// `Some(flux)` when every plaquette carries the same flux.
    pub fn uniform_flux(&self) -> Option<Flux> {
        let f = self.fluxes();
        let first = f[0];
        f.iter().all(|&x| x == first).then_some(first)
    }

    /// Checks the structural invariants of the lattice.
    pub fn validate(&self) -> Result<()> {
        if self.bonds.len() != 4 * self.plaquettes {
            return Err(Error::InvalidLattice("expected 4 bonds per plaquette".into()));
        }
        if self.detunings.len() != self.site_count() {
            return Err(Error::InvalidLattice("detuning table has wrong length".into()));
        }
        for b in &self.bonds {
            if !b.is_rhombic() || !b.from.is_valid(self.plaquettes) || !b.to.is_valid(self.plaquettes) {
                return Err(Error::InvalidLattice(format!(
                    "bond {}-{} is not a rhombic nearest-neighbour bond",
                    b.from, b.to
                )));
            }
        }
        Ok(())
    }

    /// The `L x L` matrix of the Hamiltonian restricted to one excitation:
    /// detunings on the diagonal, `sign * scale * J` on each bond.
    pub fn hamiltonian(&self) -> HermitianOperator {
        let n = self.site_count();
        let mut h = CMatrix::zeros(n, n);
        for (i, &d) in self.detunings.iter().enumerate() {
            h[(i, i)] = C64::new(d, 0.0);
        }
        for b in &self.bonds {
            let v = C64::new(b.sign.value() * b.magnitude_scale * self.coupling, 0.0);
            let (i, j) = (b.from.index(), b.to.index());
            h[(i, j)] += v;
            h[(j, i)] += v;
        }
        HermitianOperator::new(h).expect("real symmetric by construction")
    }
}

/// Builds a lattice from plaquette fluxes given in radians (each must be 0
/// or pi), a detuning table, and the coupling magnitude.
pub fn build_lattice(
    plaquettes: usize,
    plaquette_fluxes: &[f64],
    detunings: &BTreeMap<SiteId, f64>,
    coupling: f64,
) -> Result<RhombicLattice> {
    let fluxes = plaquette_fluxes
        .iter()
        .map(|&f| Flux::from_radians(f))
        .collect::<Result<Vec<_>>>()?;
    RhombicLattice::new(plaquettes, &fluxes, coupling)?.with_detunings(detunings)
}

pub fn hamiltonian_single_excitation(lattice: &RhombicLattice) -> HermitianOperator {
    lattice.hamiltonian()
}

pub fn plaquette_flux(lattice: &RhombicLattice, j: usize) -> Result<Flux> {
    lattice.plaquette_flux(j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_eigs(lat: &RhombicLattice) -> Vec<f64> {
        lat.hamiltonian().eigenvalues()
    }

    #[test]
    fn flat_index_roundtrip_and_order() {
        let order: Vec<String> = sites(2).map(|s| s.to_string()).collect();
        assert_eq!(order, ["A,1", "up,1", "dn,1", "A,2", "up,2", "dn,2", "A,3"]);
        for i in 0..site_count(5) {
            assert_eq!(SiteId::from_index(i).index(), i);
        }
    }

    #[test]
    fn site_parsing() {
        assert_eq!("A,2".parse::<SiteId>().unwrap(), SiteId::a(2));
        assert_eq!("↑,1".parse::<SiteId>().unwrap(), SiteId::up(1));
        assert_eq!("down,3".parse::<SiteId>().unwrap(), SiteId::down(3));
        assert!("B,1".parse::<SiteId>().is_err());
        assert!("A,0".parse::<SiteId>().is_err());
    }

    #[test]
    fn two_pi_plaquettes() {
        let lat = build_lattice(2, &[PI, PI], &BTreeMap::new(), 1.0).unwrap();
        assert_eq!(lat.site_count(), 7);
        assert_eq!(lat.fluxes(), vec![Flux::Pi, Flux::Pi]);
        lat.validate().unwrap();
    }

    #[test]
    fn zero_flux_gauge_is_all_minus() {
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        assert_eq!(lat.bonds().len(), 4);
        assert!(lat.bonds().iter().all(|b| b.sign == BondSign::Minus));
    }

    #[test]
    fn mixed_fluxes_roundtrip() {
        let lat = build_lattice(2, &[0.0, PI], &BTreeMap::new(), 1.0).unwrap();
        assert_eq!(lat.fluxes(), vec![Flux::Zero, Flux::Pi]);
        assert_eq!(lat.uniform_flux(), None);
    }

    #[test]
    fn build_errors() {
        assert!(build_lattice(2, &[0.0], &BTreeMap::new(), 1.0).is_err());
        assert!(matches!(
            build_lattice(1, &[PI / 2.0], &BTreeMap::new(), 1.0),
            Err(Error::InvalidFlux(_))
        ));
        assert!(build_lattice(0, &[], &BTreeMap::new(), 1.0).is_err());
        let mut d = BTreeMap::new();
        d.insert(SiteId::up(2), 1.0);
        assert!(build_lattice(1, &[0.0], &d, 1.0).is_err());
    }

    #[test]
    fn flux_from_sign_algebra() {
        use BondSign::*;
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        let cases = [
            ([Minus, Minus, Minus, Minus], Flux::Zero),
            ([Plus, Minus, Minus, Minus], Flux::Pi),
            ([Minus, Minus, Plus, Minus], Flux::Pi),
            ([Plus, Plus, Minus, Minus], Flux::Zero),
            ([Plus, Minus, Plus, Minus], Flux::Zero),
        ];
        for (signs, expect) in cases {
            let l = lat.clone().with_bond_signs(&signs).unwrap();
            assert_eq!(l.plaquette_flux(1).unwrap(), expect, "{signs:?}");
        }
        assert!(matches!(
            lat.plaquette_flux(2),
            Err(Error::PlaquetteOutOfRange { .. })
        ));
        assert!(lat.plaquette_flux(0).is_err());
    }

    #[test]
    fn pi_plaquette_spectrum() {
        let lat = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap();
        let e = sorted_eigs(&lat);
        let r2 = 2f64.sqrt();
        for (got, want) in e.iter().zip([-r2, -r2, r2, r2]) {
            assert!((got - want).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn zero_flux_plaquette_spectrum() {
        // 4-ring with equal couplings: eigenvalues -2J cos(2 pi m / 4).
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        let e = sorted_eigs(&lat);
        for (got, want) in e.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn zero_coupling_is_zero_matrix() {
        let lat = RhombicLattice::uniform(3, Flux::Pi, 0.0).unwrap();
        assert!(lat.hamiltonian().entries().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn default_gauge_matrix_entries() {
        let lat = RhombicLattice::uniform(1, Flux::Pi, 2.0).unwrap();
        let h = lat.hamiltonian();
        assert_eq!(h.get(0, 1).re, -2.0);
        assert_eq!(h.get(0, 2).re, -2.0);
        assert_eq!(h.get(3, 1).re, -2.0);
        assert_eq!(h.get(3, 2).re, 2.0);
        assert_eq!(h.get(0, 3).re, 0.0);
    }

    #[test]
    fn gauge_flip_preserves_flux() {
        let lat = RhombicLattice::new(3, &[Flux::Pi, Flux::Zero, Flux::Pi], 1.0).unwrap();
        let flipped = lat.clone().gauge_flip(SiteId::a(2)).unwrap();
        assert_ne!(lat.bonds(), flipped.bonds());
        assert_eq!(lat.fluxes(), flipped.fluxes());
    }

    #[test]
    fn antisymmetric_detuning_pattern() {
        let lat = RhombicLattice::uniform(2, Flux::Pi, 1.0)
            .unwrap()
            .with_antisymmetric_detuning(0.7)
            .unwrap();
        assert_eq!(lat.detunings(), &[0.0, 0.7, -0.7, 0.0, 0.7, -0.7, 0.0]);
    }
}
