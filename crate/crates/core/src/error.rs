use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("flux must be 0 or pi, got {0}")]
    InvalidFlux(f64),

    #[error("plaquette index {index} out of range 1..={count}")]
    PlaquetteOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not a valid density matrix: {0}")]
    NonPhysicalState(String),

    #[error("integration failed at t = {time}: trace drift {drift:.3e} exceeds {limit:.1e}")]
    TraceDrift { time: f64, drift: f64, limit: f64 },

    #[error("band gap closes (min gap {min_gap:.3e} at k = {k:.6})")]
    GapClosure { min_gap: f64, k: f64 },

    #[error("detuning pattern is not anti-symmetric: {0}")]
    NotAntiSymmetric(String),

    #[error("mixed plaquette fluxes; effective model needs uniform flux")]
    MixedFlux,

    #[error(
        "near resonance: |omega - omega_c| = {detuning:.4e} is within {ratio}x of coupling {coupling:.4e}"
    )]
    Resonance {
        detuning: f64,
        coupling: f64,
        ratio: f64,
    },

    #[error("no sign change of g_eff in window [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("dressed states are coupler-dominated (coupler weight {0:.3})")]
    NotDispersive(f64),

    #[error("matrix is singular or ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
