use thiserror::Error;

/// Errors surfaced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all homogeneous coordinates are zero")]
    AllZero,
    #[error("point lies at infinity of chart {chart}")]
    AtInfinity { chart: usize },
    #[error("chart index {chart} out of range for dimension {dim}")]
    BadChart { chart: usize, dim: usize },
    #[error("grid resolution {0} is too small (need at least 3)")]
    ResolutionTooSmall(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field has no finite value")]
    AllSentinel,
    #[error("measure is not a probability measure (mass {0})")]
    NotProbability(f64),
    #[error("local extension does not hand off continuously at the outer collar (excess {0})")]
    CollarMismatch(f64),
    #[error("growth constant must be at least 1, got {0}")]
    BadGrowth(f64),
    #[error("field is not certified ω-psh (worst margin {0})")]
    NotCertified(f64),
    #[error("field has -∞ nodes inside a stencil")]
    SentinelPresent,
    #[error("values outside [0, 1] by {0}")]
    RangeViolation(f64),
    #[error("field must have sup ≤ 0, got {0}")]
    PositiveSup(f64),
    #[error("ball is not strictly inside the chart box")]
    BallTouchesBoundary,
    #[error("{what} did not converge after {iterations} iterations (residual {residual})")]
    ConvergenceFailure {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("set rasterizes to no grid node")]
    EmptySet,
    #[error("family of sets is not monotone under inclusion")]
    NotMonotoneFamily,
    #[error("set is not circled")]
    NotCircled,
    #[error("set is polar at this resolution")]
    PolarSet,
    #[error("only {0} non-empty sublevel sets; need at least 4")]
    QuadratureUnderresolved(usize),
    #[error("sample region is empty")]
    EmptyRegion,
    #[error("every candidate has μ-mean -∞")]
    NormalizationInfeasible,
    #[error("Gram matrix is numerically singular")]
    GramSingular,
    #[error("component degrees differ or are below 2")]
    DegreeMismatch,
    #[error("lift components share a common zero")]
    DegenerateLift,
    #[error("set has zero volume at grid scale")]
    ZeroVolume,
    #[error("polynomial parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
