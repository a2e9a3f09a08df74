use thiserror::Error;

/// Failure modes shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("leading coefficient a_p must be nonzero")]
    ZeroLeadingCoefficient,
    #[error("symbol coefficient a_{index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("expected {expected} coefficients for p = {p}, got {got}")]
    CoefficientCount { p: usize, expected: usize, got: usize },
    #[error("symbol evaluated at z = 0")]
    DivisionAtZero,
    #[error("critical polynomial has non-real roots (max |Im| = {max_imag:e})")]
    ComplexCriticalPoints { max_imag: f64 },
    #[error("critical points are not simple (min gap {gap:e})")]
    MultipleCriticalPoints { gap: f64 },
    #[error("sign hypothesis violated: {negative} negative and {positive} positive critical points")]
    HypothesisViolated { negative: usize, positive: usize },
    #[error("root finder did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("x = {x} is not in the interior of cut {cut}")]
    NotInCut { cut: usize, x: f64 },
    #[error("branch labeling flipped along the approach to cut {cut} at x = {x}")]
    UnstableOrdering { cut: usize, x: f64 },
    #[error("evaluation at a branch point (|a'(z)| = {derivative:e})")]
    AtBranchPoint { derivative: f64 },
    #[error("point lies on the cut")]
    OnCut,
    #[error("vector continued fraction denominator vanished at floor {floor}")]
    DivisionBlowup { floor: usize },
    #[error("interlacing bracket failed at degree {degree}, interval {interval}")]
    InterlacingViolation { degree: usize, interval: usize },
    #[error("integrand is not integrable: {reason}")]
    NonIntegrable { reason: String },
    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    NoConvergence { estimate: f64, error: f64 },
    #[error("moment system for mixing constants is singular (row {row})")]
    SingularMomentSystem { row: usize },
    #[error("tail of the iterated integral diverges: {reason}")]
    TailDivergence { reason: String },
    #[error("branches {i} and {j} nearly coincide (gap {gap:e})")]
    NearBranchPoint { i: usize, j: usize, gap: f64 },
    #[error("error magnitude {magnitude:e} below representable range")]
    Underflow { magnitude: f64 },
    #[error("expected {expected} roots, found {found}")]
    RootCountMismatch { expected: usize, found: usize },
    #[error("expected {expected} zeros, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("cubic parameters must satisfy x1 < x2 < 0")]
    BadOrdering,
    #[error("evaluation at a branch point of the cubic")]
    BranchPointHit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
