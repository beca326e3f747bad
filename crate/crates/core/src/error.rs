use thiserror::Error;

/// Failures raised by the solvers. Diagnostic values are reported in `f64`
/// regardless of the working scalar type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("1/f is not integrable at infinity (no log-convex exponential tail found up to u = {last_m:e})")]
    NonIntegrableTail { last_m: f64 },

    #[error("value {y:e} has no preimage under F (sup F on the bracket is {sup:e})")]
    OutOfRange { y: f64, sup: f64 },

    #[error("|g'(u)| = {value:e} below division threshold at u = {u:e}")]
    DivisionNearZero { u: f64, value: f64 },

    #[error("adaptive quadrature did not converge on [{a:e}, {b:e}]: estimate {estimate:e}, error {error:e}")]
    QuadratureFailure { a: f64, b: f64, estimate: f64, error: f64 },

    #[error("step size underflow at r = {r:e} (h = {h:e}); last state u = {u:e}, u' = {du:e}")]
    StepUnderflow { r: f64, h: f64, u: f64, du: f64 },

    #[error("singular profile depends on the seeding point: relative change {change:e} at r = {r:e} exceeds {tol:e}")]
    PatchMismatch { r: f64, change: f64, tol: f64 },

    #[error("tridiagonal solve failed at row {row} (pivot {pivot:e})")]
    LinearSolveFailure { row: usize, pivot: f64 },

    #[error("reaction overflow: f(max u) * dt = {value:e} exceeds guard {guard:e}")]
    ReactionOverflow { value: f64, guard: f64 },

    #[error("trajectory covers [{start:e}, {end:e}] but [0, {required:e}] is required")]
    TimeMeshMismatch { start: f64, end: f64, required: f64 },

    #[error("monotone iteration ordering violated by {violation:e} at iterate {iterate}, node {node}")]
    OrderingViolation { iterate: usize, node: usize, violation: f64 },

    #[error("classification is not monotone in the amplitude: {detail}")]
    NonMonotoneScan { detail: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
