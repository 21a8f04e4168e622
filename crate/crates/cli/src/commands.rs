//! Subcommand implementations. Each returns the files it wants written;
//! `main` writes them together with the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fluxlattice::bands::{band_structure, trimer_zak_record, BlochModel, ZakRecord};
use fluxlattice::device::{
    coupler_off_frequency, coupler_sweep, crosstalk_correct, fit_matrix_from_scans, CouplerPoint,
    CouplerSpec, CouplingSign, CrosstalkMatrix, DeviceFile, DISPERSIVE_MIN_RATIO,
};
use fluxlattice::dynamics::{effective_model, evolve_unitary, time_grid, verify_equivalence, StateVector};
use fluxlattice::lattice::{LatticeFile, Rail, SCHEMA_VERSION};
use fluxlattice::linalg::basis_vector;
use fluxlattice::open_system::{lindblad_evolve, DensityMatrix, DephasingRates, LindbladOptions};
use fluxlattice::protocols::{adiabatic_prepare_with, spectroscopy, RampSchedule, SpectroscopyConfig};
use fluxlattice::trace::TraceDocument;
use fluxlattice::units::rate_over_j_from_time_us;
use fluxlattice::{Flux, PopulationTrace, RhombicLattice, SiteId};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;
use crate::compare::{compare_against_reference, Context, Report};
use crate::error::CliError;
use crate::manifest::{sha256_hex, Artifacts};

/// Result of one command: files to write, and a failed check if any.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub failure: Option<String>,
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Dynamics(a) => dynamics(a),
        Command::DetuningSweep(a) => detuning_sweep(a),
        Command::Spectroscopy(a) => spectroscopy_cmd(a),
        Command::Adiabatic(a) => adiabatic(a),
        Command::Bands(a) => bands(a),
        Command::Zak(a) => zak(a),
        Command::CouplerCalibrate(a) => coupler(a),
        Command::CrosstalkFit(a) => crosstalk(a),
        Command::Verify(a) => verify(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

struct Resolved {
    lattice: RhombicLattice,
    rates: Option<DephasingRates>,
    j_mhz: f64,
}

fn load_lattice(args: &LatticeArgs, default_l: usize, default_flux: Flux) -> Result<Resolved, CliError> {
    if let Some(path) = &args.lattice {
        let file = LatticeFile::from_json(&read(path)?)?;
        return Ok(Resolved {
            lattice: file.to_lattice()?,
            rates: file.dephasing_rates()?,
            j_mhz: file.j_mhz,
        });
    }
    if !(args.j_mhz.is_finite() && args.j_mhz > 0.0) {
        return Err(CliError::Config(format!(
            "--j-mhz must be positive, got {}",
            args.j_mhz
        )));
    }
    let l = args.plaquettes.unwrap_or(default_l);
    let flux = args.flux.unwrap_or(default_flux);
    Ok(Resolved {
        lattice: RhombicLattice::uniform(l, flux, 1.0)?,
        rates: None,
        j_mhz: args.j_mhz,
    })
}

/// Flags override the lattice file; all-zero rates mean a closed system.
fn resolve_rates(
    flags: &DephasingArgs,
    sites: usize,
    j_mhz: f64,
    from_file: Option<DephasingRates>,
) -> Result<Option<DephasingRates>, CliError> {
    let rates = match (flags.dephasing_us, flags.dephasing_over_j) {
        (Some(t), _) => {
            if t.is_nan() || t <= 0.0 {
                return Err(CliError::Config(format!(
                    "--dephasing-us must be positive, got {t}"
                )));
            }
            let gamma = if t.is_infinite() {
                0.0
            } else {
                rate_over_j_from_time_us(t, j_mhz)
            };
            Some(DephasingRates::uniform(sites, gamma)?)
        }
        (None, Some(g)) => Some(DephasingRates::uniform(sites, g)?),
        (None, None) => from_file,
    };
    Ok(rates.filter(|r| r.max() > 0.0))
}

/// `D` if the detunings are `+D` on up and `-D` on down sites, zero on A.
fn antisymmetric_delta(lattice: &RhombicLattice) -> Option<f64> {
    let d = lattice.detunings();
    let up = d[SiteId::up(1).index()];
    lattice
        .sites()
        .all(|s| {
            let v = d[s.index()];
            match s.rail {
                Rail::A => v == 0.0,
                Rail::Up => v == up,
                Rail::Down => v == -up,
            }
        })
        .then_some(up)
}

fn lattice_hash(lattice: &RhombicLattice) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(lattice).map_err(fluxlattice::Error::from)?;
    Ok(sha256_hex(&bytes))
}

fn simulate(
    lattice: &RhombicLattice,
    rates: Option<&DephasingRates>,
    init: SiteId,
    times: &[f64],
) -> Result<PopulationTrace, CliError> {
    let index = lattice.checked_index(init)?;
    let h = lattice.hamiltonian();
    let trace = match rates {
        Some(r) => {
            let rho0 = DensityMatrix::from_single_excitation(&basis_vector(lattice.site_count(), index))?;
            lindblad_evolve(&h, r, &rho0, times, &LindbladOptions::default())?.trace
        }
        None => evolve_unitary(&h, &StateVector::basis(lattice.site_count(), index)?, times)?,
    };
    Ok(trace.with_site_labels())
}

fn trace_document(
    lattice: &RhombicLattice,
    delta: f64,
    init: SiteId,
    rates: Option<&DephasingRates>,
    trace: PopulationTrace,
) -> Result<TraceDocument, CliError> {
    Ok(TraceDocument {
        schema: SCHEMA_VERSION,
        lattice_hash: lattice_hash(lattice)?,
        fluxes: lattice.fluxes().iter().map(Flux::to_string).collect(),
        delta_over_j: delta,
        init: Some(init.to_string()),
        dephasing_over_j: rates.map(|r| r.rates().to_vec()),
        trace,
    })
}

fn check_grid(tmax: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(tmax.is_finite() && tmax >= 0.0) {
        return Err(CliError::Config(format!(
            "--tmax must be nonnegative, got {tmax}"
        )));
    }
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    Ok(time_grid(tmax, points))
}

fn dynamics(a: &DynamicsArgs) -> Result<Outcome, CliError> {
    let times = check_grid(a.tmax, a.points)?;
    let Resolved {
        mut lattice,
        rates,
        j_mhz,
    } = load_lattice(&a.lattice, 2, Flux::Pi)?;
    if let Some(d) = a.delta {
        lattice = lattice.with_antisymmetric_detuning(d)?;
    }
    let rates = resolve_rates(&a.dephasing, lattice.site_count(), j_mhz, rates)?;
    let delta = antisymmetric_delta(&lattice);
    if delta.is_none() {
        log::warn!("detunings are not anti-symmetric; recording delta_over_j = 0");
    }
    let delta = delta.unwrap_or(0.0);
    let trace = simulate(&lattice, rates.as_ref(), a.init, &times)?;

    let mut out = Outcome::default();
    out.artifacts.add("trace.csv", trace.to_csv());
    if let Some(oracle) = a.oracle {
        let ctx = Context {
            flux: lattice.uniform_flux(),
            delta: Some(delta),
            init: Some(a.init),
            tolerance: a.tolerance,
        };
        let report = compare_against_reference(&trace, oracle, &ctx)?;
        out.failure = failure_of(&report);
        out.artifacts.add_json("oracle.json", &report)?;
    }
    let doc = trace_document(&lattice, delta, a.init, rates.as_ref(), trace)?;
    out.artifacts.add_json("trace.json", &doc)?;
    Ok(out)
}

fn failure_of(report: &Report) -> Option<String> {
    (!report.pass).then(|| {
        format!(
            "max deviation {:.3e} exceeds tolerance {:.1e}",
            report.max_deviation, report.tolerance
        )
    })
}

#[derive(Serialize)]
struct SweepEntry {
    file: String,
    delta_over_j: f64,
    model: Option<String>,
    /// Largest population difference from the effective model.
    effective_deviation: Option<f64>,
}

fn detuning_sweep(a: &DetuningSweepArgs) -> Result<Outcome, CliError> {
    let times = check_grid(a.tmax, a.points)?;
    let Resolved { lattice, rates, .. } = load_lattice(&a.lattice, 2, Flux::Pi)?;
    let rates = rates.filter(|r| r.max() > 0.0);
    let index = lattice.checked_index(a.init)?;
    let runs: Vec<(PopulationTrace, RhombicLattice, Option<String>, Option<f64>)> = a
        .delta
        .0
        .par_iter()
        .map(|&d| {
            let lat = lattice.clone().with_antisymmetric_detuning(d)?;
            let trace = simulate(&lat, rates.as_ref(), a.init, &times)?;
            let model = effective_model(&lat, d).ok();
            let deviation = match (&model, &rates) {
                (Some(_), None) => {
                    let psi0 = StateVector::basis(lat.site_count(), index)?;
                    Some(verify_equivalence(&lat, d, &psi0, &times)?)
                }
                _ => None,
            };
            let kind = model.map(|m| format!("{:?}", m.kind).to_lowercase());
            Ok((trace, lat, kind, deviation))
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = Outcome::default();
    let mut summary = Vec::new();
    for (i, ((trace, lat, kind, deviation), &d)) in runs.into_iter().zip(&a.delta.0).enumerate() {
        let stem = format!("trace_delta_{i}");
        out.artifacts.add(format!("{stem}.csv"), trace.to_csv());
        let doc = trace_document(&lat, d, a.init, rates.as_ref(), trace)?;
        out.artifacts.add_json(format!("{stem}.json"), &doc)?;
        summary.push(SweepEntry {
            file: format!("{stem}.csv"),
            delta_over_j: d,
            model: kind,
            effective_deviation: deviation,
        });
    }
    out.artifacts.add_json(
        "summary.json",
        &serde_json::json!({ "schema": SCHEMA_VERSION, "init": a.init.to_string(), "runs": summary }),
    )?;
    Ok(out)
}

fn spectroscopy_cmd(a: &SpectroscopyArgs) -> Result<Outcome, CliError> {
    let Resolved { lattice, .. } = load_lattice(&a.lattice, 1, Flux::Pi)?;
    let config = SpectroscopyConfig {
        drive_site: a.drive,
        drive_amplitude: a.omega,
        drive_detunings: a.delta_range.0.clone(),
        duration: a.duration,
    };
    let result = spectroscopy(&lattice, &config)?;
    let mut out = Outcome::default();
    out.artifacts.add("spectroscopy.csv", result.to_csv());
    out.artifacts.add_json(
        "peaks.json",
        &serde_json::json!({
            "schema": SCHEMA_VERSION,
            "drive": a.drive.to_string(),
            "omega_over_j": a.omega,
            "duration_jt": a.duration,
            "detected_peaks": result.detected_peaks,
            "eigenvalues": lattice.hamiltonian().eigenvalues(),
        }),
    )?;
    Ok(out)
}

fn adiabatic(a: &AdiabaticArgs) -> Result<Outcome, CliError> {
    let Resolved {
        lattice,
        rates,
        j_mhz,
    } = load_lattice(&a.lattice, 1, Flux::Pi)?;
    let rates = if a.closed {
        None
    } else {
        resolve_rates(&a.dephasing, lattice.site_count(), j_mhz, rates)?
    };
    let init = lattice.checked_index(a.init)?;
    let schedule = match &a.schedule {
        Some(path) => RampSchedule::from_json(&read(path)?)?,
        None => RampSchedule::two_stage(
            lattice.site_count(),
            init,
            a.init_detuning,
            lattice.coupling(),
            a.t_couple,
            a.t_detune,
        )?,
    };
    if a.samples < 2 {
        return Err(CliError::Config("--samples must be at least 2".into()));
    }
    let r = adiabatic_prepare_with(&lattice, &schedule, a.init, rates.as_ref(), a.samples)?;

    let mut csv = String::from("Jt");
    for l in &r.trace.labels {
        csv.push(',');
        csv.push_str(l);
    }
    csv.push_str(",ground_overlap\n");
    for ((t, row), g) in r
        .trace
        .times
        .iter()
        .zip(&r.trace.populations)
        .zip(&r.ground_overlap)
    {
        write!(csv, "{t:.12e}").unwrap();
        for v in row {
            write!(csv, ",{v:.12e}").unwrap();
        }
        writeln!(csv, ",{g:.12e}").unwrap();
    }
    let mut out = Outcome::default();
    out.artifacts.add("adiabatic.csv", csv);
    out.artifacts.add_json(
        "adiabatic.json",
        &serde_json::json!({
            "schema": SCHEMA_VERSION,
            "init": a.init.to_string(),
            "fluxes": lattice.fluxes().iter().map(Flux::to_string).collect::<Vec<_>>(),
            "duration_jt": schedule.total_duration(),
            "dephasing_over_j": rates.as_ref().map(|r| r.rates().to_vec()),
            "final_overlap": r.final_overlap,
            "fidelity": r.fidelity,
            "min_gap": r.min_gap,
            "final_populations": r.final_populations,
            "target_populations": r.target_populations,
        }),
    )?;
    let mut schedule_text = schedule.to_json()?;
    schedule_text.push('\n');
    out.artifacts.add("schedule.json", schedule_text);
    Ok(out)
}

fn bands(a: &BandsArgs) -> Result<Outcome, CliError> {
    let model = match a.model {
        BandModel::Rhombic => BlochModel::rhombic(1.0, a.flux)?,
        BandModel::Trimer => BlochModel::trimer(1.0, a.delta)?,
    };
    let bs = band_structure(&model, a.nk)?;
    let mins: Vec<f64> = (0..bs.band_count())
        .map(|b| bs.band(b).into_iter().fold(f64::INFINITY, f64::min))
        .collect();
    let maxs: Vec<f64> = (0..bs.band_count())
        .map(|b| bs.band(b).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut out = Outcome::default();
    out.artifacts.add("bands.csv", bs.to_csv());
    out.artifacts.add_json(
        "bands.json",
        &serde_json::json!({
            "schema": SCHEMA_VERSION,
            "model": model,
            "nk": a.nk,
            "bandwidths": bs.bandwidths(),
            "band_min": mins,
            "band_max": maxs,
        }),
    )?;
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

fn zak(a: &ZakArgs) -> Result<Outcome, CliError> {
    let records: Vec<ZakRecord> = a
        .delta_range
        .0
        .par_iter()
        .map(|&x| trimer_zak_record(x, a.band, a.nk))
        .collect::<Result<_, _>>()?;
    for r in records.iter().filter(|r| r.error.is_some()) {
        log::warn!(
            "Delta = {} sqrt2 J: {}",
            r.delta_over_sqrt2j,
            r.error.as_deref().unwrap_or("")
        );
    }
    let mut csv = String::from("delta_over_sqrt2J,zak_raw,zak_snapped,min_gap\n");
    for r in &records {
        writeln!(
            csv,
            "{:.12e},{},{},{:.12e}",
            r.delta_over_sqrt2j,
            opt(r.zak_raw),
            opt(r.zak_snapped),
            r.min_gap
        )
        .unwrap();
    }
    let mut out = Outcome::default();
    out.artifacts.add("zak.csv", csv);
    out.artifacts.add_json(
        "zak.json",
        &serde_json::json!({ "schema": SCHEMA_VERSION, "band": a.band, "nk": a.nk, "records": records }),
    )?;
    Ok(out)
}

fn coupler(a: &CouplerArgs) -> Result<Outcome, CliError> {
    let device = match &a.device {
        Some(path) => DeviceFile::from_json(&read(path)?)?,
        None => DeviceFile::reference(),
    };
    let entry = match &a.bond {
        Some(b) => device.couplers.iter().find(|c| &c.bond == b),
        None => device.couplers.first(),
    }
    .ok_or_else(|| CliError::Config("no matching coupler in the device file".into()))?;
    let spec: CouplerSpec = entry.spec;
    let omegas = &a.omega_c_range.0;
    for &w in omegas {
        let ratio = spec.with_coupler(w).dispersive_ratio();
        if ratio.is_nan() || ratio <= DISPERSIVE_MIN_RATIO {
            return Err(CliError::Config(format!(
                "omega_C = {w} MHz is not dispersive (detuning/coupling = {ratio:.2}, need > {DISPERSIVE_MIN_RATIO})"
            )));
        }
    }
    let points: Vec<CouplerPoint> = omegas
        .par_iter()
        .map(|&w| coupler_sweep(&spec, &[w], a.levels).map(|v| v[0]))
        .collect::<Result<_, _>>()?;

    let off = match a.off_window {
        Some(w) => Some(coupler_off_frequency(&spec, w)?),
        None => {
            let lo = omegas.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            coupler_off_frequency(&spec, (lo, hi))
                .inspect_err(|e| log::warn!("no coupler-off point in the sweep: {e}"))
                .ok()
        }
    };
    let sign_change = points.windows(2).any(|w| {
        matches!(
            (w[0].sign, w[1].sign),
            (CouplingSign::Positive, CouplingSign::Negative)
                | (CouplingSign::Negative, CouplingSign::Positive)
        )
    });
    let mut csv = String::from("omega_c_MHz,g_formula_MHz,g_oracle_MHz,sign\n");
    for p in &points {
        let sign = match p.sign {
            CouplingSign::Positive => "positive",
            CouplingSign::Negative => "negative",
            CouplingSign::Indeterminate => "indeterminate",
        };
        writeln!(
            csv,
            "{:.12e},{:.12e},{:.12e},{sign}",
            p.omega_c, p.g_formula, p.g_oracle
        )
        .unwrap();
    }
    let mut out = Outcome::default();
    out.artifacts.add("coupler.csv", csv);
    out.artifacts.add_json(
        "coupler.json",
        &serde_json::json!({
            "schema": SCHEMA_VERSION,
            "bond": entry.bond,
            "spec_mhz": spec,
            "levels": a.levels,
            "off_frequency_mhz": off,
            "sign_change": sign_change,
            "points": points,
        }),
    )?;
    Ok(out)
}

fn random_matrix(lines: usize, offdiag: f64, rng: &mut ChaCha8Rng) -> Result<CrosstalkMatrix, CliError> {
    let mut m = DMatrix::identity(lines, lines);
    for i in 0..lines {
        for j in 0..lines {
            if i != j {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                m[(i, j)] = sign * offdiag * rng.random_range(0.5..1.5);
            }
        }
    }
    let labels = (1..=lines).map(|i| format!("Z{i}")).collect();
    Ok(CrosstalkMatrix::new(labels, m)?)
}

fn crosstalk(a: &CrosstalkArgs) -> Result<Outcome, CliError> {
    if a.points < 2 || a.amplitude.is_nan() || a.amplitude <= 0.0 || a.sigma.is_nan() || a.sigma < 0.0 {
        return Err(CliError::Config(
            "need --points >= 2, --amplitude > 0 and --sigma >= 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let truth = match &a.matrix {
        Some(path) => CrosstalkMatrix::from_csv(&read(path)?)?,
        None => {
            if a.lines < 2 {
                return Err(CliError::Config("--lines must be at least 2".into()));
            }
            random_matrix(a.lines, a.offdiag, &mut rng)?
        }
    };
    let amps: Vec<f64> = (0..a.points)
        .map(|k| -a.amplitude + 2.0 * a.amplitude * k as f64 / (a.points - 1) as f64)
        .collect();
    let fitted = fit_matrix_from_scans(&truth, &amps, a.sigma, &mut rng)?;
    let max_error = (&fitted.m - &truth.m).amax();

    let target: Vec<f64> = (0..truth.len()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let command = crosstalk_correct(&fitted, &target)?;
    let achieved = &fitted.m * DVector::from_vec(command.clone());
    let round_trip = achieved
        .iter()
        .zip(&target)
        .map(|(x, t)| (x - t).abs())
        .fold(0.0, f64::max);

    let mut out = Outcome::default();
    out.artifacts.add("crosstalk_true.csv", truth.to_csv());
    out.artifacts.add("crosstalk_fit.csv", fitted.to_csv());
    out.artifacts.add_json(
        "crosstalk.json",
        &serde_json::json!({
            "schema": SCHEMA_VERSION,
            "seed": a.seed,
            "lines": truth.len(),
            "sigma": a.sigma,
            "max_element_error": max_error,
            "condition_number": fitted.condition_number(),
            "round_trip_error": round_trip,
            "target": target,
            "command": command,
        }),
    )?;
    Ok(out)
}

fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let text = read(&a.trace)?;
    let is_json = a
        .trace
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let (trace, mut ctx) = if is_json {
        let doc: TraceDocument = serde_json::from_str(&text).map_err(fluxlattice::Error::from)?;
        let fluxes = doc
            .fluxes
            .iter()
            .map(|f| f.parse::<Flux>())
            .collect::<Result<Vec<_>, _>>()?;
        let flux = match fluxes.split_first() {
            Some((f, rest)) if rest.iter().all(|g| g == f) => Some(*f),
            Some(_) => {
                return Err(CliError::Config(
                    "trace has mixed fluxes; no oracle applies".into(),
                ))
            }
            None => None,
        };
        let init = doc.init.as_deref().map(str::parse::<SiteId>).transpose()?;
        if flux.is_some() && doc.fluxes.len() * 3 + 1 != doc.trace.site_count() {
            return Err(fluxlattice::Error::ShapeMismatch(format!(
                "{} fluxes recorded for {} sites",
                doc.fluxes.len(),
                doc.trace.site_count()
            ))
            .into());
        }
        (
            doc.trace,
            Context {
                flux,
                delta: Some(doc.delta_over_j),
                init,
                tolerance: a.tolerance,
            },
        )
    } else {
        (
            PopulationTrace::from_csv(&text)?,
            Context {
                tolerance: a.tolerance,
                ..Context::default()
            },
        )
    };
    if a.flux.is_some() {
        ctx.flux = a.flux;
    }
    if a.delta.is_some() {
        ctx.delta = a.delta;
    }
    let report = compare_against_reference(&trace, a.oracle, &ctx)?;
    println!(
        "{}: max {:.3e}, mean {:.3e}, tolerance {:.1e} -> {}",
        a.trace.display(),
        report.max_deviation,
        report.mean_deviation,
        report.tolerance,
        if report.pass { "pass" } else { "FAIL" }
    );
    let mut out = Outcome {
        failure: failure_of(&report),
        ..Outcome::default()
    };
    out.artifacts.add_json("verify.json", &report)?;
    Ok(out)
}
