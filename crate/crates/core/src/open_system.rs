//! Lindblad evolution on the vacuum ⊕ single-excitation space.
//!
//! Index 0 of every density matrix is the global vacuum and index `i + 1`
//! is lattice site `i`. Dephasing `L_j = sqrt(Gamma_j) n_j` conserves
//! excitation number, so this space is closed under the dynamics.
//!
//! Integration is fixed-step RK4 with `h * max(|H|, max Gamma) <= 0.02`,
//! where `|H|` is the max-row-sum bound.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, symmetrize, CMatrix, CVector, HermitianOperator, Spectrum};
use crate::trace::PopulationTrace;

pub const STEP_SCALE: f64 = 0.02;
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NonPhysicalState("not square".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::NonPhysicalState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NonPhysicalState(format!("trace is {tr}")));
        }
        let min_eig = Spectrum::of(&entries).values[0];
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::NonPhysicalState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { entries })
    }

    /// `|psi><psi|` for a full-space vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    /// Embeds a single-excitation state (lattice basis) into the
    /// vacuum-augmented space.
    pub fn from_single_excitation(psi: &CVector) -> Result<Self> {
        let mut full = CVector::zeros(psi.len() + 1);
        full.rows_mut(1, psi.len()).copy_from(psi);
        Self::pure(&full)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        Spectrum::of(&self.entries).values[0]
    }

    /// Site populations (vacuum excluded).
    pub fn site_populations(&self) -> Vec<f64> {
        (1..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn vacuum_population(&self) -> f64 {
        self.entries[(0, 0)].re
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn coherence_norm(&self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.entries[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// `<psi|rho|psi>` for a single-excitation state in lattice basis.
    pub fn overlap_single_excitation(&self, psi: &CVector) -> f64 {
        let block = self.entries.view((1, 1), (psi.len(), psi.len()));
        (psi.adjoint() * block * psi)[(0, 0)].re
    }

    /// `tr(P rho)` for an operator on the single-excitation block.
    pub fn expectation_single_excitation(&self, op: &CMatrix) -> f64 {
        let n = op.nrows();
        let block = self.entries.view((1, 1), (n, n));
        (op * block).trace().re
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DephasingRates {
    rates: Vec<f64>,
}

impl DephasingRates {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidInput(
                "dephasing rates must be finite and >= 0".into(),
            ));
        }
        Ok(Self { rates })
    }

    pub fn uniform(sites: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; sites])
    }

    pub fn zero(sites: usize) -> Self {
        Self {
            rates: vec![0.0; sites],
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Default)]
pub struct LindbladOptions {
    /// Fixed RK4 step; by default chosen from the step rule.
    pub step: Option<f64>,
    /// Extra collapse operators on the full (vacuum-augmented) space.
    pub extra_collapse: Vec<CMatrix>,
    pub keep_snapshots: bool,
}

#[derive(Clone, Debug)]
pub struct LindbladOutput {
    pub trace: PopulationTrace,
    pub snapshots: Option<Vec<DensityMatrix>>,
}

/// The dissipative part of the Lindblad generator.
struct Dissipator {
    /// Elementwise damping from diagonal dephasing.
    damping: CMatrix,
    extra: Vec<(CMatrix, CMatrix, CMatrix)>,
}

impl Dissipator {
    fn new(rates: &DephasingRates, extra: &[CMatrix]) -> Self {
        let n = rates.len() + 1;
        // site index of full-space basis state (vacuum has none)
        let occ = |a: usize, j: usize| if a == j + 1 { 1.0 } else { 0.0 };
        let damping = CMatrix::from_fn(n, n, |a, b| {
            let d: f64 = rates
                .rates()
                .iter()
                .enumerate()
                .map(|(j, g)| {
                    let diff = occ(a, j) - occ(b, j);
                    -0.5 * g * diff * diff
                })
                .sum();
            C64::new(d, 0.0)
        });
        let extra = extra
            .iter()
            .map(|l| {
                let ld = l.adjoint();
                let ldl = &ld * l;
                (l.clone(), ld, ldl)
            })
            .collect();
        Self { damping, extra }
    }

    fn apply(&self, rho: &CMatrix, out: &mut CMatrix) {
        out.zip_apply(&self.damping.component_mul(rho), |o, d| *o += d);
        for (l, ld, ldl) in &self.extra {
            *out += l * rho * ld - (ldl * rho + rho * ldl) * C64::new(0.5, 0.0);
        }
    }

    fn max_rate(&self) -> f64 {
        let diag = self.damping.iter().map(|z| 2.0 * z.re.abs()).fold(0.0, f64::max);
        let extra = self
            .extra
            .iter()
            .map(|(_, _, ldl)| ldl.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        diag.max(extra)
    }
}

fn lindblad_rhs(h: &CMatrix, diss: &Dissipator, rho: &CMatrix) -> CMatrix {
    let comm = h * rho - rho * h;
    let mut out = comm * C64::new(0.0, -1.0);
    diss.apply(rho, &mut out);
    out
}

fn row_norm_bound(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Embeds a single-excitation Hamiltonian with a decoupled vacuum at
/// energy 0.
pub fn augment_with_vacuum(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let mut full = CMatrix::zeros(n + 1, n + 1);
    full.view_mut((1, 1), (n, n)).copy_from(h);
    full
}

/// Fixed-step RK4 integration of a Lindblad equation with a possibly
/// time-dependent full-space Hamiltonian.
///
/// `norm_bound` must bound `|H(t)|` over the window; it only sets the step.
pub(crate) fn integrate<F>(
    hamiltonian_at: F,
    norm_bound: f64,
    rates: &DephasingRates,
    rho0: &DensityMatrix,
    times: &[f64],
    options: &LindbladOptions,
) -> Result<(Vec<DensityMatrix>, usize)>
where
    F: Fn(f64) -> CMatrix,
{
    if rho0.dim() != rates.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: rates.len() + 1,
            actual: rho0.dim(),
        });
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("time grid"));
    }
    if times.iter().any(|&t| t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("times must be sorted and nonnegative".into()));
    }
    let diss = Dissipator::new(rates, &options.extra_collapse);
    let scale = norm_bound.max(diss.max_rate());
    let h_max = match options.step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidInput(format!("bad step {h}"))),
        None if scale > 0.0 => STEP_SCALE / scale,
        None => f64::INFINITY,
    };

    let mut rho = rho0.entries().clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = if h_max.is_finite() {
                (span / h_max).ceil().max(1.0) as usize
            } else {
                1
            };
            let h = span / n as f64;
            let half = C64::new(h / 2.0, 0.0);
            let full = C64::new(h, 0.0);
            for k in 0..n {
                let t0 = t + k as f64 * h;
                let h0 = hamiltonian_at(t0);
                let hm = hamiltonian_at(t0 + h / 2.0);
                let h1 = hamiltonian_at(t0 + h);
                let k1 = lindblad_rhs(&h0, &diss, &rho);
                let k2 = lindblad_rhs(&hm, &diss, &(&rho + &k1 * half));
                let k3 = lindblad_rhs(&hm, &diss, &(&rho + &k2 * half));
                let k4 = lindblad_rhs(&h1, &diss, &(&rho + &k3 * full));
                rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
                steps += 1;
                let drift = (rho.trace().re - 1.0).abs();
                if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
                    return Err(Error::TraceDrift {
                        time: t0 + h,
                        drift,
                        limit: TRACE_DRIFT_LIMIT,
                    });
                }
            }
            symmetrize(&mut rho);
            t = target;
        }
        out.push(DensityMatrix { entries: rho.clone() });
    }
    Ok((out, steps))
}

/// Integrates `d rho/dt = -i[H, rho] + sum_j D[L_j] rho` with
/// `L_j = sqrt(Gamma_j) n_j` and returns site populations at `times`.
///
/// `hamiltonian` acts on the single-excitation space (dimension `L`) and
/// `rho0` on the vacuum-augmented space (dimension `L + 1`).
pub fn lindblad_evolve(
    hamiltonian: &HermitianOperator,
    rates: &DephasingRates,
    rho0: &DensityMatrix,
    times: &[f64],
    options: &LindbladOptions,
) -> Result<LindbladOutput> {
    if hamiltonian.dim() != rates.len() {
        return Err(Error::DimensionMismatch {
            expected: hamiltonian.dim(),
            actual: rates.len(),
        });
    }
    let full = augment_with_vacuum(hamiltonian.entries());
    let bound = row_norm_bound(&full);
    let (states, _) = integrate(|_| full.clone(), bound, rates, rho0, times, options)?;
    let pops = states.iter().map(DensityMatrix::site_populations).collect();
    let coherence = states.iter().map(DensityMatrix::coherence_norm).collect();
    let trace = PopulationTrace::new(
        times.to_vec(),
        PopulationTrace::generic_labels(hamiltonian.dim()),
        pops,
    )?
    .with_coherence(coherence)?;
    Ok(LindbladOutput {
        trace,
        snapshots: options.keep_snapshots.then_some(states),
    })
}

const FIDELITY_EXACT_TOL: f64 = 1e-6;
const FIDELITY_RENORM_TOL: f64 = 1e-3;
const NEGATIVE_TOL: f64 = 1e-12;

fn check_distribution(n: &[f64], name: &str) -> Result<f64> {
    if n.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("population vector"));
    }
    if let Some(x) = n.iter().find(|&&x| x < -NEGATIVE_TOL) {
        return Err(Error::InvalidInput(format!("{name} has negative entry {x}")));
    }
    Ok(n.iter().map(|x| x.max(0.0)).sum())
}

/// `sum_i sqrt(n_i m_i)` without any normalization checks beyond
/// nonnegativity.
pub fn fidelity_raw(n: &[f64], n_th: &[f64]) -> Result<f64> {
    if n.len() != n_th.len() {
        return Err(Error::DimensionMismatch {
            expected: n_th.len(),
            actual: n.len(),
        });
    }
    check_distribution(n, "n")?;
    check_distribution(n_th, "n_th")?;
    Ok(n.iter()
        .zip(n_th)
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum())
}

/// Population fidelity `F = sum_i sqrt(n_i n_th_i)`.
///
/// Inputs summing to within `1e-6` of one are used as is; within `1e-3`
/// they are renormalized with a warning; anything else is an error.
pub fn fidelity(n: &[f64], n_th: &[f64]) -> Result<f64> {
    if n.len() != n_th.len() {
        return Err(Error::DimensionMismatch {
            expected: n_th.len(),
            actual: n.len(),
        });
    }
    let normalize = |v: &[f64], name: &str| -> Result<Vec<f64>> {
        let s = check_distribution(v, name)?;
        let dev = (s - 1.0).abs();
        if dev <= FIDELITY_EXACT_TOL {
            Ok(v.iter().map(|x| x.max(0.0)).collect())
        } else if dev <= FIDELITY_RENORM_TOL {
            log::warn!("{name} sums to {s:.6}; renormalizing before fidelity");
            Ok(v.iter().map(|x| x.max(0.0) / s).collect())
        } else {
            Err(Error::InvalidInput(format!(
                "{name} sums to {s}, not a probability distribution"
            )))
        }
    };
    let a = normalize(n, "n")?;
    let b = normalize(n_th, "n_th")?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x * y).sqrt())
        .sum::<f64>()
        .min(1.0))
}

/// Like [`fidelity`] but always renormalizes both inputs first.
pub fn fidelity_renormalized(n: &[f64], n_th: &[f64]) -> Result<f64> {
    let sn = check_distribution(n, "n")?;
    let st = check_distribution(n_th, "n_th")?;
    if sn <= 0.0 || st <= 0.0 {
        return Err(Error::InvalidInput("empty distribution".into()));
    }
    let a: Vec<f64> = n.iter().map(|x| x.max(0.0) / sn).collect();
    let b: Vec<f64> = n_th.iter().map(|x| x.max(0.0) / st).collect();
    fidelity_raw(&a, &b).map(|f| f.min(1.0))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dynamics::{evolve_unitary, time_grid, StateVector};
    use crate::lattice::{Flux, RhombicLattice};
    use crate::linalg::basis_vector;

    #[test]
    fn zero_rates_match_unitary() {
        let lat = RhombicLattice::uniform(2, Flux::Pi, 1.0)
            .unwrap()
            .with_antisymmetric_detuning(0.6)
            .unwrap();
        let h = lat.hamiltonian();
        let psi = StateVector::basis(7, 3).unwrap();
        let times = time_grid(4.0 * PI, 81);
        let closed = evolve_unitary(&h, &psi, &times).unwrap();
        let rho0 = DensityMatrix::from_single_excitation(psi.amplitudes()).unwrap();
        let open = lindblad_evolve(
            &h,
            &DephasingRates::zero(7),
            &rho0,
            &times,
            &LindbladOptions::default(),
        )
        .unwrap();
        let dev = open.trace.max_abs_diff(&closed).unwrap();
        assert!(dev < 1e-7, "{dev}");
    }

    #[test]
    fn pure_dephasing_of_vacuum_superposition() {
        // single site, H = 0, rho0 = |+x><+x| over {vacuum, |1>}
        let gamma = 0.3;
        let h = HermitianOperator::zeros(1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let rates = DephasingRates::uniform(1, gamma).unwrap();
        let times = time_grid(10.0, 11);
        let out = lindblad_evolve(
            &h,
            &rates,
            &rho0,
            &times,
            &LindbladOptions {
                keep_snapshots: true,
                ..Default::default()
            },
        )
        .unwrap();
        for (t, rho) in times.iter().zip(out.snapshots.unwrap()) {
            let coh = rho.entries()[(0, 1)].norm();
            assert!((coh - 0.5 * (-gamma * t / 2.0).exp()).abs() < 1e-9, "t={t}");
            assert!((rho.entries()[(1, 1)].re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_physical_states() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NonPhysicalState(_))));
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        assert!(DephasingRates::new(vec![0.1, -0.1]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let h = HermitianOperator::zeros(3);
        let rho = DensityMatrix::from_single_excitation(&basis_vector(3, 0)).unwrap();
        let r = DephasingRates::zero(4);
        assert!(lindblad_evolve(&h, &r, &rho, &[1.0], &LindbladOptions::default()).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert!((fidelity(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let f = fidelity(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn fidelity_errors_and_renormalization() {
        assert!(fidelity(&[-0.1, 1.1], &[0.5, 0.5]).is_err());
        assert!(fidelity(&[0.5, 0.4], &[0.5, 0.5]).is_err());
        assert!(fidelity(&[0.5], &[0.5, 0.5]).is_err());
        let f = fidelity(&[0.5, 0.4995], &[0.5, 0.5]).unwrap();
        assert!(f <= 1.0 && f > 0.9999);
        let raw = fidelity_raw(&[0.45, 0.45], &[0.5, 0.5]).unwrap();
        assert!((raw - 2.0 * 0.225f64.sqrt()).abs() < 1e-12);
        assert!((fidelity_renormalized(&[0.45, 0.45], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
    }
}
