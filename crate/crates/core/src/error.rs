//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid pulse shape: {0}")]
    InvalidPulse(String),

    #[error("invalid coupling specification: {0}")]
    InvalidCoupling(String),

    #[error("invalid decoherence specification: {0}")]
    InvalidDecoherence(String),

    #[error("photon cutoff must be at least 1")]
    InvalidCutoff,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("level {level} is not in the scheme of atom {atom}")]
    LevelOutsideScheme { atom: usize, level: String },

    #[error("basis state {0} is not in the state space")]
    UnknownBasisState(String),

    #[error("duplicate basis state {0}")]
    DuplicateBasisState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (residual {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("matrix is not a projector (residual {residual:e})")]
    NotAProjector { residual: f64 },

    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    EigenFailure { sweeps: usize },

    #[error("clustering tolerance must lie in (0, 1e-3], got {0:e}")]
    InvalidTolerance(f64),

    #[error("no Zeno dark subspace: coupling Hamiltonian has no zero eigenvalue cluster")]
    NoDarkSubspace,

    #[error("dark state undefined (whole subspace is dark): both pulse amplitudes vanish")]
    DarkStateUndefined,

    #[error("norm drifted by {drift:e} at t = {t}; reduce the integrator step")]
    NormDrift { t: f64, drift: f64 },

    #[error("trace drifted by {drift:e} at t = {t}; reduce the integrator step")]
    TraceDrift { t: f64, drift: f64 },

    #[error("density matrix lost positivity at t = {t} (eigenvalue {eigenvalue:e})")]
    PositivityLoss { t: f64, eigenvalue: f64 },

    #[error("density matrix lost Hermiticity at t = {t} (residual {residual:e})")]
    HermiticityLoss { t: f64, residual: f64 },

    #[error("reference propagator limited to dimension {max}, got {dim}")]
    OracleDimension { dim: usize, max: usize },

    #[error("invalid initial state: {0}")]
    InvalidState(String),

    #[error("propagation window has non-positive duration")]
    InvalidWindow,

    #[error("invalid integrator settings: {0}")]
    InvalidIntegrator(String),

    #[error("relabel pulse on atom {atom} with excited-level amplitude {amplitude:e} (pulse model invalid mid-excitation)")]
    ExcitedResidue { atom: usize, amplitude: f64 },

    #[error("invalid switch schedule: {0}")]
    ScheduleViolation(String),

    #[error("drive too strong for the Zeno regime: max pulse/coupling ratio {ratio} exceeds {limit}")]
    ZenoConditionViolated { ratio: f64, limit: f64 },

    #[error("target ket {0} is absent from the state space")]
    MissingTargetKet(String),

    #[error("state has no support")]
    EmptyState,
}

pub type Result<T> = std::result::Result<T, Error>;
