//! Weak-drive spectroscopy of the single-excitation eigenstates.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{RhombicLattice, SiteId};
use crate::linalg::{basis_vector, CMatrix, Spectrum};
use crate::open_system::augment_with_vacuum;

/// Number of samples in the readout window `[3T/4, T]`.
pub const AVERAGE_SAMPLES: usize = 65;
/// Peaks must exceed this multiple of the median background...
pub const MEDIAN_FACTOR: f64 = 3.0;
/// ...and this fraction of the strongest response (rejects drive sidelobes).
pub const RELATIVE_FLOOR: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyConfig {
    pub drive_site: SiteId,
    /// Drive amplitude `Omega` in units of `J`.
    pub drive_amplitude: f64,
    /// Drive detunings `delta` from the common qubit frequency, units of `J`.
    pub drive_detunings: Vec<f64>,
    /// Drive duration in units of `1/J`.
    pub duration: f64,
}

impl SpectroscopyConfig {
    /// `Omega = 0.05 J`, `T = 20/J`, 201 points over `[-3J, 3J]`.
    pub fn standard(drive_site: SiteId) -> Self {
        Self {
            drive_site,
            drive_amplitude: 0.05,
            drive_detunings: (0..201).map(|k| -3.0 + 6.0 * k as f64 / 200.0).collect(),
            duration: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.drive_detunings.is_empty() {
            return Err(Error::InvalidInput("drive detuning grid is empty".into()));
        }
        if self.drive_detunings.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("drive detunings"));
        }
        if !(self.drive_amplitude.is_finite() && self.drive_amplitude >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "drive amplitude must be nonnegative, got {}",
                self.drive_amplitude
            )));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidInput(format!(
                "drive duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyResult {
    pub detunings: Vec<f64>,
    pub excited_population: Vec<f64>,
    pub detected_peaks: Vec<f64>,
}

impl SpectroscopyResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_over_J,P\n");
        for (d, p) in self.detunings.iter().zip(&self.excited_population) {
            writeln!(out, "{d:.12e},{p:.12e}").unwrap();
        }
        out
    }
}

/// Time-averaged excited population for one drive detuning.
pub fn excited_population(lattice: &RhombicLattice, config: &SpectroscopyConfig, delta: f64) -> Result<f64> {
    config.validate()?;
    let drive = lattice.checked_index(config.drive_site)?;
    Ok(point(
        &augment_with_vacuum(lattice.hamiltonian().entries()),
        drive,
        config,
        delta,
    ))
}

fn point(h_full: &CMatrix, drive: usize, config: &SpectroscopyConfig, delta: f64) -> f64 {
    let n = h_full.nrows();
    let mut h = h_full.clone();
    for i in 1..n {
        h[(i, i)] -= C64::new(delta, 0.0);
    }
    let omega = C64::new(config.drive_amplitude, 0.0);
    h[(0, drive + 1)] += omega;
    h[(drive + 1, 0)] += omega;
    let spec = Spectrum::of(&h);
    let vac = basis_vector(n, 0);
    let coeffs = spec.vectors.adjoint() * &vac;
    let t = config.duration;
    let sum: f64 = (0..AVERAGE_SAMPLES)
        .map(|k| {
            let tk = 0.75 * t + 0.25 * t * k as f64 / (AVERAGE_SAMPLES - 1) as f64;
            let psi = spec.propagate_coefficients(&coeffs, tk);
            (1.0 - psi[0].norm_sqr()).clamp(0.0, 1.0)
        })
        .sum();
    sum / AVERAGE_SAMPLES as f64
}

/// Local maxima above `max(3 x median, 0.2 x max)`.
pub fn detect_peaks(detunings: &[f64], population: &[f64]) -> Vec<f64> {
    if population.len() < 3 {
        return Vec::new();
    }
    let mut sorted = population.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let top = sorted[m - 1];
    let threshold = (MEDIAN_FACTOR * median).max(RELATIVE_FLOOR * top);
    let mut peaks: Vec<f64> = (1..m - 1)
        .filter(|&i| {
            let p = population[i];
            p > population[i - 1] && p >= population[i + 1] && p > threshold
        })
        .map(|i| detunings[i])
        .collect();
    peaks.sort_by(f64::total_cmp);
    peaks
}

/// Sweeps the drive detuning starting from the vacuum each time.
///
/// The lattice must be on resonance (all detunings zero).
pub fn spectroscopy(lattice: &RhombicLattice, config: &SpectroscopyConfig) -> Result<SpectroscopyResult> {
    config.validate()?;
    if lattice.detunings().iter().any(|&d| d != 0.0) {
        return Err(Error::InvalidInput(
            "spectroscopy expects all qubits on resonance (zero detunings)".into(),
        ));
    }
    let drive = lattice.checked_index(config.drive_site)?;
    let h = lattice.hamiltonian();
    let gap = distinct_level_gap(&h.eigenvalues());
    if config.drive_amplitude > gap / 4.0 {
        log::warn!(
            "drive amplitude {} exceeds a quarter of the smallest level spacing {gap}; peaks may merge",
            config.drive_amplitude
        );
    }
    let full = augment_with_vacuum(h.entries());
    let excited_population: Vec<f64> = config
        .drive_detunings
        .par_iter()
        .map(|&d| point(&full, drive, config, d))
        .collect();
    let detected_peaks = detect_peaks(&config.drive_detunings, &excited_population);
    Ok(SpectroscopyResult {
        detunings: config.drive_detunings.clone(),
        excited_population,
        detected_peaks,
    })
}

fn distinct_level_gap(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > 1e-9)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Flux;

    fn close_to(peaks: &[f64], expect: &[f64], tol: f64) -> bool {
        peaks.len() == expect.len() && peaks.iter().zip(expect).all(|(p, e)| (p - e).abs() < tol)
    }

    #[test]
    fn pi_flux_plaquette_shows_two_peaks() {
        let lat = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap();
        let r = spectroscopy(&lat, &SpectroscopyConfig::standard(SiteId::a(1))).unwrap();
        let s = 2f64.sqrt();
        assert!(
            close_to(&r.detected_peaks, &[-s, s], 0.05),
            "{:?}",
            r.detected_peaks
        );
        assert!(r.excited_population.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn zero_flux_plaquette_shows_three_peaks() {
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        let r = spectroscopy(&lat, &SpectroscopyConfig::standard(SiteId::a(1))).unwrap();
        assert!(
            close_to(&r.detected_peaks, &[-2.0, 0.0, 2.0], 0.05),
            "{:?}",
            r.detected_peaks
        );
    }

    #[test]
    fn no_drive_no_response() {
        let lat = RhombicLattice::uniform(1, Flux::Zero, 1.0).unwrap();
        let mut cfg = SpectroscopyConfig::standard(SiteId::a(1));
        cfg.drive_amplitude = 0.0;
        let r = spectroscopy(&lat, &cfg).unwrap();
        assert!(r.excited_population.iter().all(|&p| p.abs() < 1e-14));
        assert!(r.detected_peaks.is_empty());
    }

    #[test]
    fn dark_zero_mode_gives_no_centre_peak() {
        // The pi-flux bulk zero mode lives on (up,1),(dn,1),(up,2),(dn,2) only.
        let lat = RhombicLattice::uniform(2, Flux::Pi, 1.0).unwrap();
        let r = spectroscopy(&lat, &SpectroscopyConfig::standard(SiteId::a(2))).unwrap();
        assert!(
            r.detected_peaks.iter().all(|p| p.abs() > 0.5),
            "{:?}",
            r.detected_peaks
        );
        assert!(
            close_to(&r.detected_peaks, &[-2.0, 2.0], 0.05),
            "{:?}",
            r.detected_peaks
        );
        // Driving an up site does couple to it.
        let r = spectroscopy(&lat, &SpectroscopyConfig::standard(SiteId::up(1))).unwrap();
        assert!(
            r.detected_peaks.iter().any(|p| p.abs() < 0.05),
            "{:?}",
            r.detected_peaks
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let lat = RhombicLattice::uniform(1, Flux::Pi, 1.0).unwrap();
        let mut cfg = SpectroscopyConfig::standard(SiteId::a(1));
        cfg.drive_detunings.clear();
        assert!(spectroscopy(&lat, &cfg).is_err());
        let detuned = lat.clone().with_detuning(SiteId::a(1), 0.1).unwrap();
        assert!(spectroscopy(&detuned, &SpectroscopyConfig::standard(SiteId::a(1))).is_err());
        let mut cfg = SpectroscopyConfig::standard(SiteId::a(1));
        cfg.duration = 0.0;
        assert!(spectroscopy(&lat, &cfg).is_err());
    }

    #[test]
    fn peak_finder_sorted_and_thresholded() {
        let d: Vec<f64> = (0..9).map(f64::from).collect();
        let p = [0.0, 0.9, 0.0, 0.01, 0.05, 0.01, 0.0, 0.5, 0.0];
        assert_eq!(detect_peaks(&d, &p), vec![1.0, 7.0]);
    }
}
