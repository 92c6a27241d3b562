use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    GridSize(usize),
    #[error("grid length must be positive and finite, got {0}")]
    GridLength(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("L^p norm requires p >= 1, got {0}")]
    LpExponent(f64),
    #[error("soliton parameters outside 4*omega > c^2 (omega = {omega}, c = {c})")]
    Admissibility { omega: f64, c: f64 },
    #[error("profile tail {value:.3e} at the box edge exceeds {tolerance:.1e}")]
    TailNotContained { value: f64, tolerance: f64 },
    #[error("field does not decay at the box edge: |u| = {value:.3e} > {tolerance:.1e}")]
    BoundaryDecay { value: f64, tolerance: f64 },
    #[error("invalid multi-soliton configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parameter step for finite differences leaves the admissible region")]
    StepOutsideDomain,
    #[error("time step {dt} exceeds cfl_safety * dx = {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite state during evolution at t = {t}")]
    Blowup {
        t: f64,
        snapshot: Box<crate::grid::Field>,
    },
    #[error("observer aborted the run at t = {t}: {message}")]
    Observer { t: f64, message: String },
    #[error("modulation jacobian is singular (pivot ratio {0:.3e})")]
    SingularJacobian(f64),
    #[error("modulation iterate left the admissible region after {0} step halvings")]
    ModulationAdmissibility(usize),
    #[error("modulation fit failed at t = {t}: {reason}")]
    FitFailure { t: f64, reason: String },
    #[error("τ = {tau} outside the window ({lo}, {hi})")]
    TauWindow { tau: f64, lo: f64, hi: f64 },
    #[error("dense operator with n = {0} exceeds the assembly limit of 4096")]
    CostGuard(usize),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reasons a multi-soliton configuration is rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("empty soliton list")]
    Empty,
    #[error("speeds are not strictly increasing at index {0}")]
    UnorderedSpeeds(usize),
    #[error("positions are not strictly increasing at index {0}")]
    UnorderedPositions(usize),
    #[error("gap {gap} between solitons {index} and {next} is below the separation {separation}", next = .index + 1)]
    Separation {
        index: usize,
        gap: f64,
        separation: f64,
    },
    #[error("sigma condition fails at j = {j}: sigma = {sigma}, need 0 < sigma and {c_prev} < sigma < {c_next}")]
    Sigma {
        j: usize,
        sigma: f64,
        c_prev: f64,
        c_next: f64,
    },
    #[error("soliton {index} sits at or beyond the lump endpoint c^2 = 4 omega")]
    LumpEndpoint { index: usize },
    #[error("separation must be positive, got {0}")]
    SeparationValue(f64),
}
