use thiserror::Error;

/// Errors raised by curve construction, quadrature, solvers and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("degenerate path: {0}")]
    DegeneratePath(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("weight diverges for mode {mode} at s = {s}")]
    DivergentWeight { mode: i64, s: f64 },
    #[error("quadrature failed to converge (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    QuadratureFailure { achieved: f64, wanted: f64 },
    #[error("Schwarz-Christoffel solve did not converge (residual {0:.3e})")]
    ScNoConvergence(f64),
    #[error("ill-conditioned polygon: {0}")]
    IllConditioned(String),
    #[error("evaluation at a singular point {0}")]
    SingularPoint(String),
    #[error("Theodorsen iteration diverged: max |r'/r| = {0:.4}")]
    TheodorsenDiverged(f64),
    #[error("conformal map does not match curve (distance {0:.3e})")]
    CurveMapMismatch(f64),
    #[error("boundary correspondence is not strictly monotone near t = {0:.6}")]
    CorrespondenceDegenerate(f64),
    #[error("branch tracking failed: {0}")]
    BranchError(String),
    #[error("point lies on the curve (node {0})")]
    OnCurvePoint(usize),
    #[error("Gram matrix numerically singular")]
    GramIllConditioned,
    #[error("dilation grid too fine: {0} cells")]
    GridTooFine(u64),
    #[error("weight sample {index} is not positive ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("empty solvable interval for h = {0}")]
    EmptyInterval(f64),
    #[error("I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
