//! JSON lattice definition files.
//!
//! Frequencies are given in MHz as `value / 2pi` (so `"J_MHz": 4.2` means
//! `J = 2pi x 4.2 MHz`). Loading converts everything to units of `J`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BondSign, Flux, RhombicLattice, SiteId};
use crate::error::{Error, Result};
use crate::open_system::DephasingRates;

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn schema_v1() -> u32 {
    SCHEMA_VERSION
}

/// A flux entry, either in radians or as a label (`"0"`, `"pi"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FluxValue {
    Radians(f64),
    Label(String),
}

impl FluxValue {
    pub fn to_flux(&self) -> Result<Flux> {
        match self {
            FluxValue::Radians(r) => Flux::from_radians(*r),
            FluxValue::Label(s) => s.parse(),
        }
    }
}

impl From<Flux> for FluxValue {
    fn from(f: Flux) -> Self {
        FluxValue::Label(f.to_string())
    }
}

/// Uniform value for all sites, or a per-site table keyed by site label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DephasingSpec {
    Uniform(f64),
    PerSite(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFile {
    #[serde(default = "schema_v1")]
    pub schema: u32,
    pub l: usize,
    pub fluxes: Vec<FluxValue>,
    #[serde(rename = "J_MHz")]
    pub j_mhz: f64,
    /// Detunings in MHz keyed by site label (`"A,1"`, `"up,2"`, ...).
    #[serde(default)]
    pub detunings: BTreeMap<String, f64>,
    /// Optional bond-sign override (`"+"`/`"-"`) in canonical bond order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<Vec<String>>,
    /// Dephasing time `1/Gamma` in microseconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing_us: Option<DephasingSpec>,
    /// Dephasing rate `Gamma / J` (dimensionless).
    #[serde(default, rename = "dephasing_over_J", skip_serializing_if = "Option::is_none")]
    pub dephasing_over_j: Option<DephasingSpec>,
}

impl LatticeFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported lattice schema {}",
                self.schema
            )));
        }
        if !(self.j_mhz.is_finite() && self.j_mhz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "J_MHz must be positive, got {}",
                self.j_mhz
            )));
        }
        if self.dephasing_us.is_some() && self.dephasing_over_j.is_some() {
            return Err(Error::InvalidInput(
                "give either dephasing_us or dephasing_over_J, not both".into(),
            ));
        }
        self.to_lattice().map(|_| ())
    }

    pub fn fluxes(&self) -> Result<Vec<Flux>> {
        self.fluxes.iter().map(FluxValue::to_flux).collect()
    }

    /// Coupling in angular units of rad/us.
    pub fn coupling_rad_per_us(&self) -> f64 {
        2.0 * PI * self.j_mhz
    }

    /// The lattice in units of `J` (coupling 1, detunings `Delta/J`).
    pub fn to_lattice(&self) -> Result<RhombicLattice> {
        let fluxes = self.fluxes()?;
        let mut lattice = RhombicLattice::new(self.l, &fluxes, 1.0)?;
        let mut detunings = BTreeMap::new();
        for (label, mhz) in &self.detunings {
            let site: SiteId = label.parse()?;
            detunings.insert(site, mhz / self.j_mhz);
        }
        lattice = lattice.with_detunings(&detunings)?;
        if let Some(gauge) = &self.gauge {
            let signs = gauge
                .iter()
                .map(|s| match s.trim() {
                    "+" | "plus" | "+1" => Ok(BondSign::Plus),
                    "-" | "minus" | "-1" => Ok(BondSign::Minus),
                    other => Err(Error::InvalidInput(format!("bad bond sign {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            lattice = lattice.with_bond_signs(&signs)?;
            if lattice.fluxes() != fluxes {
                return Err(Error::InvalidLattice(
                    "gauge override does not reproduce the requested fluxes".into(),
                ));
            }
        }
        Ok(lattice)
    }

    /// Per-site dephasing rates in units of `J`, if configured.
    pub fn dephasing_rates(&self) -> Result<Option<DephasingRates>> {
        let n = super::site_count(self.l);
        let j = self.coupling_rad_per_us();
        // Times in microseconds convert through J; rates over J pass through.
        let (spec, j_per_us) = match (&self.dephasing_us, &self.dephasing_over_j) {
            (Some(s), None) => (s, Some(j)),
            (None, Some(s)) => (s, None),
            (None, None) => return Ok(None),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(
                    "give either dephasing_us or dephasing_over_J, not both".into(),
                ))
            }
        };
        let to_rate = |v: f64| -> Result<f64> {
            match j_per_us {
                None => Ok(v),
                Some(_) if v.is_infinite() => Ok(0.0),
                Some(j) if v > 0.0 => Ok(1.0 / (v * j)),
                Some(_) => Err(Error::InvalidInput(format!(
                    "dephasing time must be positive, got {v}"
                ))),
            }
        };
        let mut rates = vec![0.0; n];
        match spec {
            DephasingSpec::Uniform(v) => {
                let r = to_rate(*v)?;
                rates.iter_mut().for_each(|x| *x = r);
            }
            DephasingSpec::PerSite(map) => {
                for (label, v) in map {
                    let site: SiteId = label.parse()?;
                    if !site.is_valid(self.l) {
                        return Err(Error::InvalidInput(format!("site {site} not in lattice")));
                    }
                    rates[site.index()] = to_rate(*v)?;
                }
            }
        }
        DephasingRates::new(rates).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const L2_PI: &str = r#"{
        "schema": 1, "l": 2, "fluxes": ["pi", 3.141592653589793], "J_MHz": 4.2,
        "detunings": {"up,1": 4.2, "dn,1": -4.2}
    }"#;

    #[test]
    fn parses_and_converts_to_j_units() {
        let f = LatticeFile::from_json(L2_PI).unwrap();
        let lat = f.to_lattice().unwrap();
        assert_eq!(lat.fluxes(), vec![Flux::Pi, Flux::Pi]);
        assert!((lat.detuning(SiteId::up(1)).unwrap() - 1.0).abs() < 1e-15);
        assert!((lat.detuning(SiteId::down(1)).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(lat.coupling(), 1.0);
        assert!(f.dephasing_rates().unwrap().is_none());
    }

    #[test]
    fn dephasing_us_converts_to_rate_over_j() {
        let text = r#"{"l": 1, "fluxes": [0], "J_MHz": 4.2, "dephasing_us": 1.0}"#;
        let f = LatticeFile::from_json(text).unwrap();
        let rates = f.dephasing_rates().unwrap().unwrap();
        let expect = 1.0 / (2.0 * PI * 4.2);
        assert!(rates.rates().iter().all(|r| (r - expect).abs() < 1e-15));
    }

    #[test]
    fn per_site_dephasing_over_j() {
        let text = r#"{"l": 1, "fluxes": [0], "J_MHz": 4.2,
                       "dephasing_over_J": {"A,2": 0.1}}"#;
        let rates = LatticeFile::from_json(text)
            .unwrap()
            .dephasing_rates()
            .unwrap()
            .unwrap();
        assert_eq!(rates.rates(), &[0.0, 0.0, 0.0, 0.1]);
    }

    #[test]
    fn gauge_override_must_match_fluxes() {
        let ok = r#"{"l": 1, "fluxes": ["pi"], "J_MHz": 1, "gauge": ["+", "-", "-", "-"]}"#;
        assert!(LatticeFile::from_json(ok).is_ok());
        let bad = r#"{"l": 1, "fluxes": ["pi"], "J_MHz": 1, "gauge": ["-", "-", "-", "-"]}"#;
        assert!(LatticeFile::from_json(bad).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(LatticeFile::from_json(r#"{"l": 1, "fluxes": [1.0], "J_MHz": 1}"#).is_err());
        assert!(LatticeFile::from_json(r#"{"l": 2, "fluxes": [0], "J_MHz": 1}"#).is_err());
        assert!(LatticeFile::from_json(r#"{"l": 1, "fluxes": [0], "J_MHz": -1}"#).is_err());
        assert!(LatticeFile::from_json(r#"{"schema": 2, "l": 1, "fluxes": [0], "J_MHz": 1}"#).is_err());
    }
}
