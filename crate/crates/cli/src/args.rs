//! Command-line definitions.
//!
//! Lattice-level quantities (`--delta`, `--tmax`, `--omega`, ...) are in
//! units of `J`; flags ending in `-mhz` or taking device files are in MHz
//! as `value / 2pi`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fluxlattice::{Flux, SiteId};
use serde::Serialize;

use crate::parse;

/// A list of numbers given as one flag value (`0,sqrt2,10` or `a:b:n`).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Values(pub Vec<f64>);

pub fn number(s: &str) -> Result<f64, String> {
    parse::number(s)
}

pub fn values_list(s: &str) -> Result<Values, String> {
    parse::list(s).map(Values)
}

pub fn values_range(s: &str) -> Result<Values, String> {
    parse::range(s).map(Values)
}

/// `lo:hi`.
pub fn window(s: &str) -> Result<(f64, f64), String> {
    parse::window(s)
}

pub fn site(s: &str) -> Result<SiteId, String> {
    s.parse::<SiteId>().map_err(|e| e.to_string())
}

pub fn flux(s: &str) -> Result<Flux, String> {
    s.parse::<Flux>()
        .or_else(|_| parse::number(s).and_then(|r| Flux::from_radians(r).map_err(|e| e.to_string())))
        .map_err(|_| format!("flux must be 0 or pi, got {s:?}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "fluxlattice",
    version,
    about = "Flux-threaded rhombic qubit lattice simulations"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Output directory (default: out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "FLUXLATTICE_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Population dynamics from one excited site.
    Dynamics(DynamicsArgs),
    /// Dynamics for several anti-symmetric detunings.
    DetuningSweep(DetuningSweepArgs),
    /// Weak-drive spectroscopy from the vacuum.
    Spectroscopy(SpectroscopyArgs),
    /// Adiabatic ground-state preparation.
    Adiabatic(AdiabaticArgs),
    /// Bloch band structure.
    Bands(BandsArgs),
    /// Zak phase of the trimer lattice versus inter-cell coupling.
    Zak(ZakArgs),
    /// Tunable-coupler sweep: formula against the three-mode oracle.
    CouplerCalibrate(CouplerArgs),
    /// Flux-crosstalk matrix fit from synthetic scans.
    CrosstalkFit(CrosstalkArgs),
    /// Compare a trace file against an analytic or effective-model oracle.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dynamics(_) => "dynamics",
            Self::DetuningSweep(_) => "detuning-sweep",
            Self::Spectroscopy(_) => "spectroscopy",
            Self::Adiabatic(_) => "adiabatic",
            Self::Bands(_) => "bands",
            Self::Zak(_) => "zak",
            Self::CouplerCalibrate(_) => "coupler-calibrate",
            Self::CrosstalkFit(_) => "crosstalk-fit",
            Self::Verify(_) => "verify",
        }
    }
}

/// Lattice selection: a lattice file, or `--l` and `--flux` with `J = 1`.
#[derive(Clone, Debug, Args, Serialize)]
pub struct LatticeArgs {
    /// Lattice JSON file.
    #[arg(long, conflicts_with_all = ["plaquettes", "flux"])]
    pub lattice: Option<PathBuf>,

    /// Number of plaquettes.
    #[arg(long = "l", id = "plaquettes")]
    pub plaquettes: Option<usize>,

    /// Uniform plaquette flux (0 or pi).
    #[arg(long, value_parser = flux)]
    pub flux: Option<Flux>,

    /// Coupling `J / 2pi` in MHz, used to convert dephasing times.
    #[arg(long, default_value = "4.2", value_parser = number, allow_hyphen_values = true)]
    pub j_mhz: f64,
}

#[derive(Clone, Debug, Default, Args, Serialize)]
pub struct DephasingArgs {
    /// Uniform dephasing time `1/Gamma` in microseconds.
    #[arg(long, value_parser = number, allow_hyphen_values = true, conflicts_with = "dephasing_over_j")]
    pub dephasing_us: Option<f64>,

    /// Uniform dephasing rate `Gamma / J`.
    #[arg(long, value_parser = number, allow_hyphen_values = true)]
    pub dephasing_over_j: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    AnalyticL1,
    EffectiveModel,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    /// Initially excited site, e.g. `A,2`.
    #[arg(long, default_value = "A,1", value_parser = site)]
    pub init: SiteId,

    /// Final time `Jt`.
    #[arg(long, default_value = "4pi", value_parser = number, allow_hyphen_values = true)]
    pub tmax: f64,

    #[arg(long, default_value_t = 401)]
    pub points: usize,

    /// Anti-symmetric detuning `Delta / J` (+ on up, - on down sites).
    #[arg(long, value_parser = number, allow_hyphen_values = true)]
    pub delta: Option<f64>,

    #[command(flatten)]
    pub dephasing: DephasingArgs,

    /// Also check the trace against an oracle.
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,

    /// Tolerance for `--oracle`.
    #[arg(long, default_value = "1e-8", value_parser = number, allow_hyphen_values = true)]
    pub tolerance: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DetuningSweepArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    /// Detunings `Delta / J`.
    #[arg(long, default_value = "0,sqrt2,10", value_parser = values_list, allow_hyphen_values = true)]
    pub delta: Values,

    #[arg(long, default_value = "A,1", value_parser = site)]
    pub init: SiteId,

    #[arg(long, default_value = "4pi", value_parser = number, allow_hyphen_values = true)]
    pub tmax: f64,

    #[arg(long, default_value_t = 401)]
    pub points: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SpectroscopyArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    /// Driven site.
    #[arg(long, default_value = "A,1", value_parser = site)]
    pub drive: SiteId,

    /// Drive amplitude `Omega / J`.
    #[arg(long, default_value = "0.05", value_parser = number, allow_hyphen_values = true)]
    pub omega: f64,

    /// Drive duration `JT`.
    #[arg(long, default_value = "20", value_parser = number, allow_hyphen_values = true)]
    pub duration: f64,

    /// Drive detunings `delta / J` as `start:stop:count`.
    #[arg(long, default_value = "-3:3:201", value_parser = values_range, allow_hyphen_values = true)]
    pub delta_range: Values,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct AdiabaticArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    #[arg(long, default_value = "A,1", value_parser = site)]
    pub init: SiteId,

    /// Starting detuning of the initial site, `Delta / J`.
    #[arg(long, default_value = "-4", value_parser = number, allow_hyphen_values = true)]
    pub init_detuning: f64,

    /// Duration of the coupling ramp `0 -> J`, in `1/J`.
    #[arg(long, default_value = "15", value_parser = number, allow_hyphen_values = true)]
    pub t_couple: f64,

    /// Duration of the detuning ramp to zero, in `1/J`.
    #[arg(long, default_value = "15", value_parser = number, allow_hyphen_values = true)]
    pub t_detune: f64,

    /// Ramp schedule JSON, replacing the two-stage ramp.
    #[arg(long)]
    pub schedule: Option<PathBuf>,

    #[command(flatten)]
    pub dephasing: DephasingArgs,

    /// Ignore any dephasing from the lattice file.
    #[arg(long)]
    pub closed: bool,

    /// Output samples along the ramp.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandModel {
    Rhombic,
    Trimer,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BandsArgs {
    #[arg(long, value_enum, default_value = "rhombic")]
    pub model: BandModel,

    /// Rhombic flux.
    #[arg(long, default_value = "pi", value_parser = flux)]
    pub flux: Flux,

    /// Trimer inter-cell coupling `Delta / J`.
    #[arg(long, default_value = "sqrt2", value_parser = number, allow_hyphen_values = true)]
    pub delta: f64,

    #[arg(long, default_value_t = 512)]
    pub nk: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ZakArgs {
    /// `Delta` in units of `sqrt2 J`, as `start:stop:count`.
    #[arg(long, default_value = "0.2:2.0:7", value_parser = values_range, allow_hyphen_values = true)]
    pub delta_range: Values,

    /// Band index, 0 for the lowest.
    #[arg(long, default_value_t = 0)]
    pub band: usize,

    #[arg(long, default_value_t = 512)]
    pub nk: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CouplerArgs {
    /// Device JSON (default: the built-in reference device).
    #[arg(long)]
    pub device: Option<PathBuf>,

    /// Coupler bond label from the device file (default: the first).
    #[arg(long)]
    pub bond: Option<String>,

    /// Coupler frequencies in MHz as `start:stop:count`.
    #[arg(long, default_value = "4800:9000:43", value_parser = values_range, allow_hyphen_values = true)]
    pub omega_c_range: Values,

    /// Fock levels per mode in the oracle.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,

    /// Search window `lo:hi` (MHz) for the coupler-off frequency.
    #[arg(long, value_parser = window, allow_hyphen_values = true)]
    pub off_window: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CrosstalkArgs {
    /// Number of flux lines for the synthetic matrix.
    #[arg(long, default_value_t = 7)]
    pub lines: usize,

    /// Typical off-diagonal magnitude of the synthetic matrix.
    #[arg(long, default_value = "6e-4", value_parser = number, allow_hyphen_values = true)]
    pub offdiag: f64,

    /// Noise on each compensation scan point.
    #[arg(long, default_value = "1e-5", value_parser = number, allow_hyphen_values = true)]
    pub sigma: f64,

    #[arg(long, default_value_t = 20210501)]
    pub seed: u64,

    /// Points per compensation scan.
    #[arg(long, default_value_t = 41)]
    pub points: usize,

    /// Scan amplitude; points span `[-a, a]`.
    #[arg(long, default_value = "0.5", value_parser = number, allow_hyphen_values = true)]
    pub amplitude: f64,

    /// True matrix as CSV instead of a random one.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Trace file (JSON document or CSV).
    #[arg(long)]
    pub trace: PathBuf,

    #[arg(long, value_enum)]
    pub oracle: OracleKind,

    /// Flux, if the trace file does not record it.
    #[arg(long, value_parser = flux)]
    pub flux: Option<Flux>,

    /// Anti-symmetric detuning `Delta / J`, if not recorded.
    #[arg(long, value_parser = number, allow_hyphen_values = true)]
    pub delta: Option<f64>,

    #[arg(long, default_value = "1e-8", value_parser = number, allow_hyphen_values = true)]
    pub tolerance: f64,
}
