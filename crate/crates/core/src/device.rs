//! Hardware layer: coupler-mediated effective coupling, a truncated
//! three-mode oracle for it, transmon tuning and Z-line crosstalk.
//!
//! Frequencies here are physical, written as `omega / 2pi` in MHz unless a
//! field says otherwise. Convert to lattice units (`J = 1`) at the boundary.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SCHEMA_VERSION;
use crate::linalg::{CMatrix, Spectrum};

/// Detuning-to-coupling ratio below which the dispersive formula is refused.
pub const DISPERSIVE_MIN_RATIO: f64 = 5.0;
/// Ratio below which the formula is used with a warning.
pub const DISPERSIVE_WARN_RATIO: f64 = 10.0;
/// Dressed qubit states with more coupler weight than this are rejected.
pub const MAX_HYBRIDIZATION: f64 = 0.2;
/// Crosstalk matrices with a larger condition number are not inverted.
pub const MAX_CONDITION: f64 = 1e6;
const ROOT_REL_TOL: f64 = 1e-9;

/// Two qubits `A`, `B` and the coupler `C` between them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    #[serde(default)]
    pub u_a: f64,
    #[serde(default)]
    pub u_b: f64,
    #[serde(default)]
    pub u_c: f64,
    pub g_ac: f64,
    pub g_bc: f64,
    pub g_ab: f64,
}

impl CouplerSpec {
    pub fn with_coupler(mut self, omega_c: f64) -> Self {
        self.omega_c = omega_c;
        self
    }

    /// `min(|omega_A - omega_C|, |omega_B - omega_C|) / max(|g_AC|, |g_BC|)`.
    pub fn dispersive_ratio(&self) -> f64 {
        let det = (self.omega_a - self.omega_c)
            .abs()
            .min((self.omega_b - self.omega_c).abs());
        let g = self.g_ac.abs().max(self.g_bc.abs());
        if g == 0.0 {
            f64::INFINITY
        } else {
            det / g
        }
    }

    fn check_finite(&self) -> Result<()> {
        let v = [
            self.omega_a,
            self.omega_b,
            self.omega_c,
            self.u_a,
            self.u_b,
            self.u_c,
            self.g_ac,
            self.g_bc,
            self.g_ab,
        ];
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("coupler spec"))
        }
    }
}

/// Second-order coupling
/// `g_AB + (g_AC g_BC / 2) (1/(w_A - w_C) + 1/(w_B - w_C))`.
pub fn g_eff(spec: &CouplerSpec) -> Result<f64> {
    spec.check_finite()?;
    let ratio = spec.dispersive_ratio();
    if ratio <= DISPERSIVE_MIN_RATIO {
        return Err(Error::Resonance {
            detuning: (spec.omega_a - spec.omega_c)
                .abs()
                .min((spec.omega_b - spec.omega_c).abs()),
            coupling: spec.g_ac.abs().max(spec.g_bc.abs()),
            ratio,
        });
    }
    if ratio < DISPERSIVE_WARN_RATIO {
        log::warn!("coupler only weakly dispersive (detuning/coupling = {ratio:.2})");
    }
    Ok(g_eff_formula(spec))
}

fn g_eff_formula(s: &CouplerSpec) -> f64 {
    s.g_ab + 0.5 * s.g_ac * s.g_bc * (1.0 / (s.omega_a - s.omega_c) + 1.0 / (s.omega_b - s.omega_c))
}

/// Coupler frequency in `window` where `g_eff` vanishes.
///
/// The window must lie on one side of both qubits, away from the poles; the
/// formula is monotone there, so the root is unique.
pub fn coupler_off_frequency(spec: &CouplerSpec, window: (f64, f64)) -> Result<f64> {
    spec.check_finite()?;
    let (mut lo, mut hi) = (window.0.min(window.1), window.0.max(window.1));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite("coupler window"));
    }
    for w in [spec.omega_a, spec.omega_b] {
        if lo <= w && w <= hi {
            return Err(Error::InvalidInput(format!(
                "window [{lo}, {hi}] contains a qubit pole at {w}"
            )));
        }
    }
    let f = |wc: f64| g_eff_formula(&spec.with_coupler(wc));
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRoot { lo, hi });
    }
    while hi - lo > ROOT_REL_TOL * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if spec.with_coupler(root).dispersive_ratio() < DISPERSIVE_WARN_RATIO {
        log::warn!("coupling-off point {root} lies outside the well-dispersive regime");
    }
    Ok(root)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingSign {
    Positive,
    Negative,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacuumRabi {
    /// Signed exchange coupling of the effective two-qubit Hamiltonian.
    pub coupling: f64,
    pub sign: CouplingSign,
    /// Energy difference of the two qubit-like dressed states.
    pub splitting: f64,
    /// Largest coupler weight among the two qubit-like dressed states.
    pub hybridization: f64,
}

fn mode_index(n: [usize; 3], levels: usize) -> usize {
    (n[0] * levels + n[1]) * levels + n[2]
}

/// Full truncated Hamiltonian of modes `(A, B, C)` with `levels` each.
pub fn three_mode_hamiltonian(spec: &CouplerSpec, levels: usize) -> Result<CMatrix> {
    if levels < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 levels per mode, got {levels}"
        )));
    }
    spec.check_finite()?;
    let dim = levels.pow(3);
    let omega = [spec.omega_a, spec.omega_b, spec.omega_c];
    let u = [spec.u_a, spec.u_b, spec.u_c];
    let pairs = [(0, 2, spec.g_ac), (1, 2, spec.g_bc), (0, 1, spec.g_ab)];
    let mut h = CMatrix::zeros(dim, dim);
    for a in 0..levels {
        for b in 0..levels {
            for c in 0..levels {
                let n = [a, b, c];
                let i = mode_index(n, levels);
                let diag: f64 = (0..3)
                    .map(|m| {
                        let k = n[m] as f64;
                        omega[m] * k + 0.5 * u[m] * k * (k - 1.0)
                    })
                    .sum();
                h[(i, i)] = C64::new(diag, 0.0);
                // a_p^dag a_q moves one quantum from q to p.
                for &(p, q, g) in &pairs {
                    for (from, to) in [(q, p), (p, q)] {
                        if n[from] == 0 || n[to] + 1 >= levels {
                            continue;
                        }
                        let mut m = n;
                        m[from] -= 1;
                        m[to] += 1;
                        let amp = g * ((n[from] as f64) * (n[to] as f64 + 1.0)).sqrt();
                        h[(mode_index(m, levels), i)] += C64::new(amp, 0.0);
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Exact-diagonalization oracle for the qubit-qubit coupling.
///
/// Restricts the truncated three-mode Hamiltonian to one excitation, takes
/// the two dressed states with the most qubit weight, and rotates them
/// back onto `{|A>, |B>}` with the closest unitary; the off-diagonal of that
/// effective 2x2 Hamiltonian is the signed coupling.
pub fn three_mode_vacuum_rabi(spec: &CouplerSpec, levels: usize) -> Result<VacuumRabi> {
    let h = three_mode_hamiltonian(spec, levels)?;
    let one = [[1, 0, 0], [0, 1, 0], [0, 0, 1]].map(|n| mode_index(n, levels));
    let block = CMatrix::from_fn(3, 3, |r, c| h[(one[r], one[c])]);
    let spec3 = Spectrum::of(&block);
    let coupler_weight = |k: usize| spec3.vectors[(2, k)].norm_sqr();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| coupler_weight(a).total_cmp(&coupler_weight(b)));
    let mut picked = [order[0], order[1]];
    picked.sort_unstable();
    let hybridization = coupler_weight(picked[0]).max(coupler_weight(picked[1]));
    if hybridization > MAX_HYBRIDIZATION {
        return Err(Error::NotDispersive(hybridization));
    }

    // S holds the qubit components of the two dressed states.
    let s = CMatrix::from_fn(2, 2, |r, c| spec3.vectors[(r, picked[c])]);
    let svd = s.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let rot = u * vt;
    let energies = CMatrix::from_fn(2, 2, |r, c| {
        if r == c {
            C64::new(spec3.values[picked[r]], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let h_eff = &rot * energies * rot.adjoint();
    let coupling = h_eff[(0, 1)].re;
    let scale = spec
        .g_ab
        .abs()
        .max((spec.g_ac * spec.g_bc).abs() / (spec.omega_a - spec.omega_c).abs().max(1e-300));
    let sign = if coupling.abs() < 1e-3 * scale {
        CouplingSign::Indeterminate
    } else if coupling > 0.0 {
        CouplingSign::Positive
    } else {
        CouplingSign::Negative
    };
    Ok(VacuumRabi {
        coupling,
        sign,
        splitting: (spec3.values[picked[1]] - spec3.values[picked[0]]).abs(),
        hybridization,
    })
}

/// One point of a coupler-frequency sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerPoint {
    pub omega_c: f64,
    pub g_formula: f64,
    pub g_oracle: f64,
    pub sign: CouplingSign,
}

pub fn coupler_sweep(spec: &CouplerSpec, omegas: &[f64], levels: usize) -> Result<Vec<CouplerPoint>> {
    omegas
        .iter()
        .map(|&wc| {
            let s = spec.with_coupler(wc);
            let oracle = three_mode_vacuum_rabi(&s, levels)?;
            Ok(CouplerPoint {
                omega_c: wc,
                g_formula: g_eff(&s)?,
                g_oracle: oracle.coupling,
                sign: oracle.sign,
            })
        })
        .collect()
}

/// Frequency of a two-junction transmon versus external flux.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonTuneCurve {
    pub omega_max: f64,
    pub omega_min: f64,
}

impl TransmonTuneCurve {
    pub fn new(omega_max: f64, omega_min: f64) -> Result<Self> {
        if !(omega_min > 0.0 && omega_min <= omega_max && omega_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < omega_min <= omega_max, got {omega_min}, {omega_max}"
            )));
        }
        Ok(Self { omega_max, omega_min })
    }

    /// Junction asymmetry `d = (omega_min / omega_max)^2`.
    pub fn asymmetry(&self) -> f64 {
        (self.omega_min / self.omega_max).powi(2)
    }
}

/// `omega_max (cos^2(pi phi) + d^2 sin^2(pi phi))^(1/4)`, `phi` in flux quanta.
///
/// Hits `omega_max` at integer `phi` and `omega_min` at half-integer `phi`.
pub fn tune_curve(curve: &TransmonTuneCurve, phi: f64) -> f64 {
    let d = curve.asymmetry();
    let x = std::f64::consts::PI * phi;
    curve.omega_max * (x.cos().powi(2) + d * d * x.sin().powi(2)).powf(0.25)
}

/// Normalized Z-line crosstalk matrix: `V' = M V` with unit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    pub labels: Vec<String>,
    pub m: DMatrix<f64>,
}

impl CrosstalkMatrix {
    pub fn new(labels: Vec<String>, m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} crosstalk matrix with {} labels",
                m.nrows(),
                m.ncols(),
                labels.len()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("crosstalk matrix"));
        }
        if (0..m.nrows()).any(|i| (m[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidInput("crosstalk diagonal must be 1".into()));
        }
        Ok(Self { labels, m })
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self {
            labels,
            m: DMatrix::identity(n, n),
        }
    }

    /// Rescales each row so its diagonal element is 1.
    pub fn from_unnormalized(labels: Vec<String>, mut m: DMatrix<f64>) -> Result<Self> {
        for i in 0..m.nrows().min(m.ncols()) {
            let d = m[(i, i)];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::InvalidInput(format!("zero diagonal on line {i}")));
            }
            m.row_mut(i).scale_mut(1.0 / d);
        }
        Self::new(labels, m)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.m.clone().singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("line");
        for l in &self.labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for j in 0..self.len() {
                write!(out, ",{:.12e}", self.m[(i, j)]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty crosstalk file".into()))?;
        let labels: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let n = labels.len();
        let mut m = DMatrix::zeros(n, n);
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            if i >= n {
                return Err(Error::ShapeMismatch("too many crosstalk rows".into()));
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "row {} has {} fields",
                    i + 1,
                    fields.len()
                )));
            }
            for (j, f) in fields[1..].iter().enumerate() {
                m[(i, j)] = f
                    .trim()
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("row {}: {e}", i + 1)))?;
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::ShapeMismatch(format!("{rows} rows for {n} lines")));
        }
        Self::new(labels, m)
    }
}

/// Pulse amplitudes to send so the lines receive `target`: `M^-1 target`.
pub fn crosstalk_correct(matrix: &CrosstalkMatrix, target: &[f64]) -> Result<Vec<f64>> {
    if target.len() != matrix.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.len(),
            actual: target.len(),
        });
    }
    let cond = matrix.condition_number();
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let v = DVector::from_column_slice(target);
    let x = matrix
        .m
        .clone()
        .lu()
        .solve(&v)
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok(x.iter().copied().collect())
}

/// Crosstalk element from a compensation scan.
///
/// Each point is `(source amplitude, target amplitude that restores the
/// target qubit)`. Leakage `m` is cancelled by `target = -m * source`, so
/// the element is minus the least-squares slope.
pub fn crosstalk_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("crosstalk scan"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if points.len() < 2 || sxx <= 1e-300 {
        return Err(Error::InvalidInput(
            "crosstalk fit needs at least two distinct source amplitudes".into(),
        ));
    }
    Ok(-sxy / sxx)
}

/// Synthetic compensation scan for the `(target, source)` element of `m`
/// with Gaussian noise of width `sigma` on the target amplitude.
pub fn synthetic_scan<R: Rng + ?Sized>(
    matrix: &CrosstalkMatrix,
    target: usize,
    source: usize,
    amplitudes: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if target >= matrix.len() || source >= matrix.len() {
        return Err(Error::InvalidInput("crosstalk line out of range".into()));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let element = matrix.m[(target, source)];
    Ok(amplitudes
        .iter()
        .map(|&x| (x, -element * x + noise.sample(rng)))
        .collect())
}

/// Fits every off-diagonal element from synthetic scans.
pub fn fit_matrix_from_scans<R: Rng + ?Sized>(
    truth: &CrosstalkMatrix,
    amplitudes: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<CrosstalkMatrix> {
    let n = truth.len();
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let scan = synthetic_scan(truth, i, j, amplitudes, sigma, rng)?;
                m[(i, j)] = crosstalk_fit(&scan)?;
            }
        }
    }
    CrosstalkMatrix::new(truth.labels.clone(), m)
}

/// Per-qubit parameters as listed in the device characterization table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitRecord {
    pub label: String,
    pub omega_min_ghz: f64,
    pub omega_max_ghz: f64,
    pub omega_idle_ghz: f64,
    /// Readout resonator; stored, not used.
    pub omega_r_ghz: f64,
    pub t1_idle_us: f64,
    pub t2_phi_us: f64,
    pub f0: f64,
    pub f1: f64,
}

impl QubitRecord {
    pub fn tune_curve(&self) -> Result<TransmonTuneCurve> {
        TransmonTuneCurve::new(self.omega_max_ghz, self.omega_min_ghz)
    }
}

/// A coupler attached to a lattice bond, e.g. `"A,1-up,1"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondCoupler {
    pub bond: String,
    #[serde(flatten)]
    pub spec: CouplerSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceFile {
    #[serde(default = "crate::lattice::file::schema_v1")]
    pub schema: u32,
    pub qubits: Vec<QubitRecord>,
    /// Coupler specs in MHz (`omega / 2pi`).
    #[serde(default)]
    pub couplers: Vec<BondCoupler>,
}

impl DeviceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        if d.schema != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported device schema {}",
                d.schema
            )));
        }
        for q in &d.qubits {
            q.tune_curve()?;
        }
        Ok(d)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Pure-dephasing rates `Gamma = 2 / T_phi` in units of `J`, for a
    /// coupling `J = 2pi x j_mhz`.
    pub fn dephasing_over_j(&self, j_mhz: f64) -> Vec<f64> {
        let j = 2.0 * std::f64::consts::PI * j_mhz;
        self.qubits.iter().map(|q| 2.0 / (q.t2_phi_us * j)).collect()
    }

    /// The seven-qubit, two-plaquette device used in the experiments, with
    /// an illustrative coupler (g = 120 MHz to each qubit, 5 MHz direct).
    pub fn reference() -> Self {
        let rows: [(&str, [f64; 8]); 7] = [
            ("A,1", [3.639, 4.891, 4.120, 6.216, 63.7, 9.7, 0.983, 0.973]),
            ("up,1", [3.816, 4.867, 4.160, 6.112, 68.4, 12.8, 0.976, 0.972]),
            ("dn,1", [3.972, 5.055, 4.239, 6.118, 54.0, 9.8, 0.972, 0.965]),
            ("A,2", [3.795, 5.121, 4.208, 6.160, 40.0, 3.8, 0.990, 0.962]),
            ("up,2", [3.909, 5.109, 4.110, 6.186, 55.6, 12.8, 0.987, 0.940]),
            ("dn,2", [3.952, 5.217, 4.165, 6.190, 42.8, 8.4, 0.989, 0.972]),
            ("A,3", [3.898, 5.083, 4.231, 6.083, 68.8, 10.8, 0.975, 0.972]),
        ];
        let qubits = rows
            .iter()
            .map(|(label, v)| QubitRecord {
                label: (*label).to_string(),
                omega_min_ghz: v[0],
                omega_max_ghz: v[1],
                omega_idle_ghz: v[2],
                omega_r_ghz: v[3],
                t1_idle_us: v[4],
                t2_phi_us: v[5],
                f0: v[6],
                f1: v[7],
            })
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            qubits,
            couplers: vec![BondCoupler {
                bond: "A,1-up,1".into(),
                spec: reference_coupler(),
            }],
        }
    }
}

/// Illustrative coupler at the A,1 / up,1 idle frequencies (MHz). The
/// coupling values are chosen, not measured.
pub fn reference_coupler() -> CouplerSpec {
    CouplerSpec {
        omega_a: 4120.0,
        omega_b: 4160.0,
        omega_c: 5500.0,
        u_a: -220.0,
        u_b: -220.0,
        u_c: -180.0,
        g_ac: 120.0,
        g_bc: 120.0,
        g_ab: 5.0,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn symmetric(wc: f64) -> CouplerSpec {
        CouplerSpec {
            omega_a: 4200.0,
            omega_b: 4200.0,
            omega_c: wc,
            u_a: -220.0,
            u_b: -220.0,
            u_c: -180.0,
            g_ac: 100.0,
            g_bc: 100.0,
            g_ab: 5.0,
        }
    }

    #[test]
    fn formula_limits_and_symmetric_case() {
        let far = symmetric(1e12);
        assert!((g_eff(&far).unwrap() - 5.0).abs() < 1e-6);
        let s = symmetric(5200.0);
        assert!((g_eff(&s).unwrap() - (5.0 + 100.0 * 100.0 / (4200.0 - 5200.0))).abs() < 1e-12);
        assert!(matches!(g_eff(&symmetric(4300.0)), Err(Error::Resonance { .. })));
    }

    #[test]
    fn off_point_matches_closed_form() {
        let s = symmetric(0.0);
        let root = coupler_off_frequency(&s, (4700.0, 9000.0)).unwrap();
        let exact = 4200.0 + 100.0 * 100.0 / 5.0;
        assert!((root - exact).abs() < 1e-9 * exact);
        let mut no_direct = s;
        no_direct.g_ab = 0.0;
        assert!(matches!(
            coupler_off_frequency(&no_direct, (4700.0, 1e6)),
            Err(Error::NoRoot { .. })
        ));
        assert!(coupler_off_frequency(&s, (4000.0, 9000.0)).is_err());
    }

    #[test]
    fn oracle_without_coupler_is_exact() {
        let mut s = symmetric(6000.0);
        s.g_ac = 0.0;
        s.g_bc = 0.0;
        let r = three_mode_vacuum_rabi(&s, 3).unwrap();
        assert!((r.splitting - 10.0).abs() < 1e-9);
        assert!((r.coupling - 5.0).abs() < 1e-9);
        assert_eq!(r.sign, CouplingSign::Positive);
    }

    #[test]
    fn oracle_agrees_with_formula_when_dispersive() {
        for wc in [5200.0, 5600.0, 7000.0, 3000.0] {
            let s = symmetric(wc);
            let formula = g_eff(&s).unwrap();
            let r = three_mode_vacuum_rabi(&s, 3).unwrap();
            assert!(
                (r.coupling - formula).abs() / formula.abs() < 0.05,
                "{wc}: {r:?} vs {formula}"
            );
        }
    }

    #[test]
    fn oracle_converged_in_truncation() {
        let s = symmetric(5400.0);
        let a = three_mode_vacuum_rabi(&s, 3).unwrap().coupling;
        let b = three_mode_vacuum_rabi(&s, 4).unwrap().coupling;
        assert!((a - b).abs() / a.abs() < 1e-3);
    }

    #[test]
    fn oracle_rejects_resonant_coupler() {
        assert!(matches!(
            three_mode_vacuum_rabi(&symmetric(4210.0), 2),
            Err(Error::NotDispersive(_))
        ));
        assert!(three_mode_vacuum_rabi(&symmetric(6000.0), 1).is_err());
    }

    #[test]
    fn sweep_changes_sign() {
        let omegas: Vec<f64> = (0..30).map(|k| 5200.0 + 200.0 * k as f64).collect();
        let pts = coupler_sweep(&symmetric(0.0), &omegas, 3).unwrap();
        assert_eq!(pts[0].sign, CouplingSign::Negative);
        assert_eq!(pts.last().unwrap().sign, CouplingSign::Positive);
        assert!(pts.windows(2).all(|w| w[1].g_formula >= w[0].g_formula));
    }

    #[test]
    fn tune_curve_endpoints() {
        let c = TransmonTuneCurve::new(4891.0, 3639.0).unwrap();
        assert!((tune_curve(&c, 0.0) - 4891.0).abs() < 1e-9);
        assert!((tune_curve(&c, 0.5) - 3639.0).abs() < 1e-9);
        assert!((tune_curve(&c, 1.3) - tune_curve(&c, 0.3)).abs() < 1e-9);
        assert!((tune_curve(&c, 0.2) - tune_curve(&c, 0.8)).abs() < 1e-9);
        let q = tune_curve(&c, 0.25);
        assert!(q < 4891.0 && q > 3639.0);
        assert!(TransmonTuneCurve::new(3.0, 4.0).is_err());
    }

    #[test]
    fn crosstalk_identity_and_singular() {
        let labels: Vec<String> = (0..2).map(|i| format!("Z{i}")).collect();
        let id = CrosstalkMatrix::identity(labels.clone());
        assert_eq!(crosstalk_correct(&id, &[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 6e-4, 6e-4, 1.0]);
        let ct = CrosstalkMatrix::new(labels.clone(), m.clone()).unwrap();
        let v = [0.5, -0.25];
        let x = crosstalk_correct(&ct, &v).unwrap();
        let back = &m * DVector::from_column_slice(&x);
        assert!((back[0] - v[0]).abs() < 1e-12 && (back[1] - v[1]).abs() < 1e-12);
        let sing =
            CrosstalkMatrix::new(labels, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(matches!(
            crosstalk_correct(&sing, &v),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn crosstalk_fit_cases() {
        assert!((crosstalk_fit(&[(0.0, 0.0), (1.0, -6e-4)]).unwrap() - 6e-4).abs() < 1e-15);
        assert_eq!(crosstalk_fit(&[(0.0, 0.2), (1.0, 0.2), (2.0, 0.2)]).unwrap(), 0.0);
        assert!(crosstalk_fit(&[(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(crosstalk_fit(&[(1.0, 0.0)]).is_err());
    }

    #[test]
    fn noisy_fit_recovers_element() {
        let labels: Vec<String> = (0..2).map(|i| format!("Z{i}")).collect();
        let m = CrosstalkMatrix::new(labels, DMatrix::from_row_slice(2, 2, &[1.0, 6e-4, 0.0, 1.0])).unwrap();
        let amps: Vec<f64> = (0..41).map(|k| -0.5 + k as f64 / 40.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let scan = synthetic_scan(&m, 0, 1, &amps, 1e-5, &mut rng).unwrap();
        assert!((crosstalk_fit(&scan).unwrap() - 6e-4).abs() < 3e-5);
    }

    #[test]
    fn csv_and_json_roundtrip() {
        let labels: Vec<String> = (0..3).map(|i| format!("Z{i}")).collect();
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 1e-4 * (i + 2 * j) as f64 });
        let ct = CrosstalkMatrix::new(labels, m).unwrap();
        assert_eq!(CrosstalkMatrix::from_csv(&ct.to_csv()).unwrap(), ct);
        let dev = DeviceFile::reference();
        assert_eq!(DeviceFile::from_json(&dev.to_json().unwrap()).unwrap(), dev);
        assert_eq!(dev.qubits.len(), 7);
    }
}
