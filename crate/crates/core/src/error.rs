use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate `{name}` must be strictly positive, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },

    #[error("M/M/1 observer model needs lambda < mu (lambda = {lambda}, mu = {mu})")]
    UnstableObserver { lambda: f64, mu: f64 },

    /// The finite-speed controller is not ergodic (lambda >= smax * mu).
    /// Steady-state solvers reject it; the simulator accepts it with a flag.
    #[error("finite-speed model is unstable: lambda = {lambda} >= smax * mu = {capacity}")]
    UnstableFinite { lambda: f64, capacity: f64 },

    #[error("variant {variant} is incompatible with max speed {smax}")]
    VariantMismatch { variant: &'static str, smax: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("requested length {length} is shorter than the minimum {minimum}")]
    LengthTooShort { length: usize, minimum: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("singular boundary system: {0}")]
    SingularBoundary(String),

    #[error("speed profile must be strictly increasing and nonnegative: {0}")]
    NonIncreasingProfile(String),

    /// Some speed j satisfies j * mu == lambda; the fluid analysis needs every
    /// speed to be either strictly stable or strictly unstable.
    #[error("speed {speed} sits exactly on the stability boundary (j * mu = lambda)")]
    BoundarySpeed { speed: usize },

    #[error("quadrature did not reach tolerance: {0}")]
    QuadratureFailure(String),

    #[error("truncation too small: boundary mass {boundary_mass:e} exceeds {tolerance:e}")]
    TruncationTooSmall { boundary_mass: f64, tolerance: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),
}
