//! The three experiments as reproducible procedures: caging dynamics,
//! drive spectroscopy and adiabatic ground-state preparation.

mod adiabatic;
mod caging;
mod spectroscopy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adiabatic::{adiabatic_prepare, adiabatic_prepare_with, AdiabaticResult, GAP_WARN};
pub use caging::{caging_benchmark, plaquette_populations, CagingResult};
pub use spectroscopy::{
    detect_peaks, excited_population, spectroscopy, SpectroscopyConfig, SpectroscopyResult,
};

const CONTINUITY_TOL: f64 = 1e-9;

/// One linear piece of a ramp. Couplings and detunings are in units of the
/// final `J`; durations in `1/J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSegment {
    pub duration: f64,
    pub j_start: f64,
    pub j_end: f64,
    pub delta_start: Vec<f64>,
    pub delta_end: Vec<f64>,
}

/// Piecewise-linear schedule of `J(t)` and per-site detunings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    #[serde(default = "crate::lattice::file::schema_v1")]
    pub schema: u32,
    pub segments: Vec<RampSegment>,
}

impl RampSchedule {
    pub fn new(segments: Vec<RampSegment>) -> Result<Self> {
        let s = Self {
            schema: crate::lattice::SCHEMA_VERSION,
            segments,
        };
        s.validate()?;
        Ok(s)
    }

    /// Couplings `0 -> j` over `t_couple`, then detuning of `init` from
    /// `init_detuning` to 0 over `t_detune`.
    pub fn two_stage(
        sites: usize,
        init: usize,
        init_detuning: f64,
        j: f64,
        t_couple: f64,
        t_detune: f64,
    ) -> Result<Self> {
        if init >= sites {
            return Err(Error::InvalidInput(format!(
                "init site {init} out of range for {sites} sites"
            )));
        }
        let mut detuned = vec![0.0; sites];
        detuned[init] = init_detuning;
        Self::new(vec![
            RampSegment {
                duration: t_couple,
                j_start: 0.0,
                j_end: j,
                delta_start: detuned.clone(),
                delta_end: detuned.clone(),
            },
            RampSegment {
                duration: t_detune,
                j_start: j,
                j_end: j,
                delta_start: detuned,
                delta_end: vec![0.0; sites],
            },
        ])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("schedule has no segments".into()))?;
        let sites = first.delta_start.len();
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration >= 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {k} has duration {}",
                    seg.duration
                )));
            }
            if seg.delta_start.len() != sites || seg.delta_end.len() != sites {
                return Err(Error::InvalidSchedule(format!(
                    "segment {k} detuning vectors must have {sites} entries"
                )));
            }
            let values = [seg.j_start, seg.j_end]
                .into_iter()
                .chain(seg.delta_start.iter().copied())
                .chain(seg.delta_end.iter().copied());
            if values.into_iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("ramp values"));
            }
        }
        for (k, w) in self.segments.windows(2).enumerate() {
            let jump = (w[0].j_end - w[1].j_start).abs().max(
                w[0].delta_end
                    .iter()
                    .zip(&w[1].delta_start)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
            if jump > CONTINUITY_TOL {
                return Err(Error::InvalidSchedule(format!(
                    "discontinuity of {jump} between segments {k} and {}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn site_count(&self) -> usize {
        self.segments.first().map_or(0, |s| s.delta_start.len())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `(J, detunings)` at time `t`, clamped to the schedule window.
    ///
    /// Zero-length segments are jumps; the value after the jump applies.
    pub fn at(&self, t: f64) -> (f64, Vec<f64>) {
        let mut start = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let end = start + seg.duration;
            let last = k + 1 == self.segments.len();
            if t < end || last {
                let x = if seg.duration > 0.0 {
                    ((t - start) / seg.duration).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                let j = seg.j_start + x * (seg.j_end - seg.j_start);
                let d = seg
                    .delta_start
                    .iter()
                    .zip(&seg.delta_end)
                    .map(|(a, b)| a + x * (b - a))
                    .collect();
                return (j, d);
            }
            start = end;
        }
        (0.0, Vec::new())
    }

    /// Values at the very start, before any zero-length jump.
    pub fn initial(&self) -> (f64, Vec<f64>) {
        let s = &self.segments[0];
        (s.j_start, s.delta_start.clone())
    }

    pub fn terminal(&self) -> (f64, Vec<f64>) {
        let s = self.segments.last().expect("validated schedule is nonempty");
        (s.j_end, s.delta_end.clone())
    }
}
