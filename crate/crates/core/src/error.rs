use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported Bessel order 2*nu = {0}")]
    UnsupportedOrder(i32),
    #[error("kernel is not Levy-integrable: {0}")]
    DivergentKernel(String),
    #[error("lifted kernel would be negative: derivative {derivative:e} > 0 at r = {radius}")]
    NegativeKernel { radius: f64, derivative: f64 },
    #[error("tail integral diverges: {0}")]
    TailDivergence(String),
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("oscillatory quadrature failed to converge: {0}")]
    OscillatoryQuadratureFailure(String),
    #[error("singular quadrature failed: {0}")]
    SingularQuadratureFailure(String),
    #[error("insufficient smoothness: declared {declared}, required {required}")]
    InsufficientSmoothness { declared: f64, required: f64 },
    #[error("spectral aliasing: boundary magnitude {boundary:e} exceeds {limit:e}")]
    AliasingError { boundary: f64, limit: f64 },
    #[error("symmetry mismatch: {0}")]
    SymmetryMismatch(String),
    #[error("missing normal derivative on the degenerate set")]
    MissingNormalDerivative,
    #[error("weighted norm is not finite: {0}")]
    NonIntegrable(String),
    #[error("positivity floor violated: min {min:e} at {at:?}")]
    PositivityFailure { min: f64, at: Vec<f64> },
    #[error("no sample of K lies off the hyperplane")]
    EmptyK0,
    #[error("not a supersolution: residual {residual:e} below -{tol:e} at {at:?}")]
    NotSupersolution { residual: f64, tol: f64, at: Vec<f64> },
    #[error("not a subsolution: residual {residual:e} above {tol:e} at {at:?}")]
    NotSubsolution { residual: f64, tol: f64, at: Vec<f64> },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
