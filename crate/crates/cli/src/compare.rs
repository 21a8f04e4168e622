//! Trace comparison against closed-form and effective-model references.

use fluxlattice::dynamics::{effective_model, evolve_states, StateVector};
use fluxlattice::protocols::plaquette_populations;
use fluxlattice::{Error, Flux, PopulationTrace, RhombicLattice, SiteId};
use serde::Serialize;

use crate::args::OracleKind;
use crate::error::CliError;

/// Initial populations must be within this of a basis state.
const INIT_TOL: f64 = 1e-9;

/// Run parameters the trace itself does not carry.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub flux: Option<Flux>,
    pub delta: Option<f64>,
    pub init: Option<SiteId>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub oracle: OracleKind,
    pub sites: usize,
    pub samples: usize,
    pub init: String,
    pub flux: Flux,
    pub delta_over_j: f64,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Site excited in the first row of `trace`.
pub fn initial_site(trace: &PopulationTrace) -> Result<SiteId, CliError> {
    let row = trace
        .populations
        .first()
        .ok_or_else(|| Error::ShapeMismatch("trace has no samples".into()))?;
    let (idx, _) = row
        .iter()
        .enumerate()
        .find(|(_, p)| (**p - 1.0).abs() < INIT_TOL)
        .ok_or_else(|| Error::InvalidInput("trace does not start from a single excited site".into()))?;
    if row
        .iter()
        .enumerate()
        .any(|(i, p)| i != idx && p.abs() > INIT_TOL)
    {
        return Err(Error::InvalidInput("trace does not start from a single excited site".into()).into());
    }
    Ok(SiteId::from_index(idx))
}

fn reference_rows(
    oracle: OracleKind,
    sites: usize,
    flux: Flux,
    delta: f64,
    init: SiteId,
    times: &[f64],
) -> Result<Vec<Vec<f64>>, CliError> {
    match oracle {
        OracleKind::AnalyticL1 => {
            if sites != 4 {
                return Err(Error::ShapeMismatch(format!(
                    "analytic-l1 needs a 4-site trace, got {sites} sites"
                ))
                .into());
            }
            if delta != 0.0 {
                return Err(CliError::Config(
                    "analytic-l1 oracle only covers zero detuning".into(),
                ));
            }
            Ok(times
                .iter()
                .map(|&t| plaquette_populations(flux, init, t).to_vec())
                .collect())
        }
        OracleKind::EffectiveModel => {
            if sites < 4 || !(sites - 1).is_multiple_of(3) {
                return Err(
                    Error::ShapeMismatch(format!("{sites} sites is not a rhombic chain (3l + 1)")).into(),
                );
            }
            let lattice =
                RhombicLattice::uniform((sites - 1) / 3, flux, 1.0)?.with_antisymmetric_detuning(delta)?;
            let model = effective_model(&lattice, delta)?;
            let psi0 = StateVector::basis(sites, lattice.checked_index(init)?)?;
            let psi_model = StateVector::new(model.embed(psi0.amplitudes())?)?;
            evolve_states(&model.hamiltonian(), &psi_model, times)?
                .iter()
                .map(|s| {
                    let back = model.unembed(s)?;
                    Ok(back.iter().map(|z| z.norm_sqr()).collect())
                })
                .collect::<Result<_, Error>>()
                .map_err(CliError::from)
        }
    }
}

/// Max and mean absolute population deviation of `trace` from the oracle.
pub fn compare_against_reference(
    trace: &PopulationTrace,
    oracle: OracleKind,
    ctx: &Context,
) -> Result<Report, CliError> {
    let flux = ctx
        .flux
        .ok_or_else(|| CliError::Config("flux is not recorded in the trace; pass --flux".into()))?;
    let delta = ctx.delta.unwrap_or(0.0);
    let sites = trace.site_count();
    let init = match ctx.init {
        Some(s) => s,
        None => initial_site(trace)?,
    };
    let reference = reference_rows(oracle, sites, flux, delta, init, &trace.times)?;
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (row, want) in trace.populations.iter().zip(&reference) {
        for (a, b) in row.iter().zip(want) {
            let d = (a - b).abs();
            max = max.max(d);
            sum += d;
            count += 1;
        }
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(Report {
        oracle,
        sites,
        samples: trace.len(),
        init: init.to_string(),
        flux,
        delta_over_j: delta,
        max_deviation: max,
        mean_deviation: mean,
        tolerance: ctx.tolerance,
        pass: max < ctx.tolerance,
    })
}
