use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin j = {0}: must be a positive half-integer no larger than 25")]
    InvalidSpin(f64),

    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not special-unitary (deviation {deviation:.3e})")]
    NotSpecialUnitary { deviation: f64 },

    #[error("Kraus operator determinant deviates from 1 by {deviation:.3e}")]
    BadDeterminant { deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint t = {t} lies outside [0, {total}]")]
    CheckpointOutOfRange { t: f64, total: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("anisotropy parameters must sum to zero (sum = {0:.3e})")]
    AnisotropyNotZeroSum(f64),

    #[error("radial coordinate a = {0} must be non-negative")]
    NegativeRadial(f64),

    #[error("lifted matrix overflows: a*j = {0:.1} exceeds 300")]
    LiftOverflow(f64),

    #[error("radial coordinate a = {a:.4} is at or below the coupled-integrator floor {floor}")]
    BelowFloor { a: f64, floor: f64 },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("CFL violation: gamma*dt/h = {ratio:.3} exceeds {limit}")]
    Cfl { ratio: f64, limit: f64 },

    #[error("probability mass drifted to {mass:.9} (tolerance {tol:.1e})")]
    MassLeak { mass: f64, tol: f64 },

    #[error("truncated grid carries {fraction:.3} of the trace identity right-hand side")]
    TraceTruncation { fraction: f64 },

    #[error("time mismatch: {left} vs {right}")]
    TimeMismatch { left: f64, right: f64 },

    #[error("Bloch vector must have unit norm (norm = {0})")]
    InvalidBloch(f64),

    #[error("sample set is empty")]
    EmptySamples,

    #[error("resource guard: {0}")]
    ResourceLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
