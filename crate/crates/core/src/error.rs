use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolwaveError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no solitary wave at amplitude C = {c}: a(C²) = {a} is not positive")]
    NoSolitaryWave { c: f64, a: f64 },
    #[error("degenerate parametrization: a'(C²) = 0, the amplitude is not a function of ω")]
    DegenerateParametrization,
    #[error("μ_ω = 0 (a' = a/C²), the tangent projector is singular")]
    ZeroMu,
    #[error("singular determinant |D(λ)| = {0:e} at the requested λ")]
    SingularDeterminant(f64),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("step size error: {0}")]
    StepSize(String),
    #[error("fixed-point iteration diverged at step {step} (residual {residual:e})")]
    FixedPointDivergence { step: usize, residual: f64 },
    #[error("time {t} outside the computed range [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },
    #[error("field is too far from the solitary manifold (distance {distance:e}, limit {limit:e})")]
    FarFromManifold { distance: f64, limit: f64 },
    #[error("small denominator {value:e} in the modulation equations (threshold {threshold:e})")]
    SmallDenominator { value: f64, threshold: f64 },
    #[error("non-positive value {value:e} at t = {t} in decay fit")]
    NonPositiveValue { t: f64, value: f64 },
    #[error("not enough points for a fit: {0} < 8")]
    TooFewPoints(usize),
}

pub type Result<T> = std::result::Result<T, SolwaveError>;
