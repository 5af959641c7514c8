use thiserror::Error;

/// Errors raised by geometric constructions, estimators and checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vectors are linearly dependent (residual {residual:e} at column {column})")]
    RankDeficient { column: usize, residual: f64 },
    #[error("frame already spans the whole space (dim {0})")]
    FullDimensional(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("projected body has zero volume")]
    DegenerateProjection,
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("point lies on the unit sphere; the density is not defined there")]
    OnUnitSphere,
    #[error("chord misses the open unit ball (|z| = {0})")]
    ChordMissesBall(f64),
    #[error("plane misses the unit sphere (|z| = {0})")]
    PlaneMissesSphere(f64),
    #[error("line misses the interior of the body")]
    LineMissesBody,
    #[error("no sample out of {0} landed in the restricted cylinder")]
    EmptyIntersection(usize),
    #[error("rejection sampling acceptance {0:e} is below 1e-4")]
    SamplingFailure(f64),
    #[error("family is not a covering: {0}")]
    NotACovering(String),
    #[error("family is not a packing: {0}")]
    NotAPacking(String),
    #[error("disk family is separable")]
    NotNS,
    #[error("slice maximum unstable under refinement ({0:.3}% change)")]
    SliceEstimateUnstable(f64),
    #[error("ridge sum exceeds 1 at {witness:?} (value {value})")]
    PointwiseViolated { witness: Vec<f64>, value: f64 },
    #[error("unsupported base transform: {0}")]
    UnsupportedBase(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable tag, used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "RankDeficient",
            Error::FullDimensional(_) => "FullDimensional",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DegenerateBody(_) => "DegenerateBody",
            Error::DegenerateProjection => "DegenerateProjection",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Domain(_) => "DomainError",
            Error::OnUnitSphere => "OnUnitSphere",
            Error::ChordMissesBall(_) => "ChordMissesBall",
            Error::PlaneMissesSphere(_) => "PlaneMissesSphere",
            Error::LineMissesBody => "LineMissesBody",
            Error::EmptyIntersection(_) => "EmptyIntersection",
            Error::SamplingFailure(_) => "SamplingFailure",
            Error::NotACovering(_) => "NotACovering",
            Error::NotAPacking(_) => "NotAPacking",
            Error::NotNS => "NotNS",
            Error::SliceEstimateUnstable(_) => "SliceEstimateUnstable",
            Error::PointwiseViolated { .. } => "PointwiseViolated",
            Error::UnsupportedBase(_) => "UnsupportedBase",
            Error::Invalid(_) => "Invalid",
        }
    }
}
