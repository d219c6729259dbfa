use thiserror::Error;

/// Hard violations of the parameter invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("thermal occupancy must be finite and non-negative, got {0}")]
    NegativeOccupancy(f64),
    #[error("coupling eta must satisfy 0 <= eta < 1, got {0}")]
    CouplingOutOfRange(f64),
    #[error("detuning xi must be finite, got {0}")]
    NonFiniteDetuning(f64),
    #[error("the full model needs both the cavity frequency and the Rabi frequency")]
    MissingFullModelFrequencies,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (zero pivot in column {column})")]
    Singular { column: usize },
}

/// Failures while assembling a photon-number generator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("photon order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("photon order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error(
        "truncation n_max = {n_max} is too small for order {order} (need n_max >= {required})"
    )]
    TruncationTooSmall {
        n_max: usize,
        order: usize,
        required: usize,
    },
    #[error("the closed-form generator exists only for orders 1 and 2, got {0}")]
    NoClosedForm(usize),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Failures of the photon-distribution solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("generator does not conserve probability (column sum defect {defect:e})")]
    NotConservative { defect: f64 },
    #[error("steady state is not unique (pivot ratio {pivot_ratio:e})")]
    DegenerateKernel { pivot_ratio: f64 },
    #[error("distribution is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },
    #[error("distribution has a negative entry {value:e} at n = {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("distribution length {got} does not match the generator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size underflow at t = {t} (h = {h:e}); the system is too stiff for the explicit integrator")]
    Stiffness { t: f64, h: f64 },
    #[error("time span must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("observables did not converge before n_max reached the limit {limit}")]
    TruncationNotConverged { limit: usize },
    #[error("detailed balance needs kappa1 > kappa2 (got {kappa1} and {kappa2})")]
    NoDetailedBalance { kappa1: f64, kappa2: f64 },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Failures of the joint emitter-cavity solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LindbladError {
    #[error("superoperator side length {side} exceeds the limit {limit}")]
    DimensionOverflow { side: usize, limit: usize },
    #[error("steady state is not unique (pivot ratio {pivot_ratio:e})")]
    NonUniqueKernel { pivot_ratio: f64 },
    #[error("cavity truncation must be at least 1")]
    TruncationTooSmall,
    #[error("density matrix must have unit trace (got {0})")]
    NotTraceOne(f64),
    #[error("steady state is not a density matrix (hermiticity defect {hermiticity_defect:e}, smallest eigenvalue {min_eigenvalue:e})")]
    NotPhysical {
        hermiticity_defect: f64,
        min_eigenvalue: f64,
    },
    #[error("effective model: {0}")]
    Effective(#[from] DynamicsError),
    #[error(transparent)]
    Param(#[from] ParamError),
}
