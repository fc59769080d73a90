use thiserror::Error;

/// Errors raised by the slice, atlas, solver and foliation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass must be positive, got {0}")]
    NonpositiveMass(f64),
    #[error("charge violates e^2 < M^2 (M = {mass}, e = {charge})")]
    SubextremalityViolated { mass: f64, charge: f64 },
    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("radius {0} lies on a horizon")]
    OnHorizon(f64),
    #[error("radius {r} outside the domain [{lo}, {hi}]")]
    OutOfDomain { r: f64, lo: f64, hi: f64 },
    #[error("no sign change located while bracketing: {0}")]
    BracketingFailed(String),
    #[error("spacelike condition violated: {0}")]
    SpacelikeViolated(String),
    #[error("radius {r} is outside the range of block {block}")]
    WrongRegion { r: f64, block: String },
    #[error("no admissible slice portion: {0}")]
    EmptyDomain(String),
    #[error("no throat: c = {c} exceeds the critical value {critical}")]
    NoThroat { c: f64, critical: f64 },
    #[error("adaptive quadrature exceeded its depth limit on [{a}, {b}]")]
    QuadratureDidNotConverge { a: f64, b: f64 },
    #[error("null-coordinate matching failed at a horizon crossing: {0}")]
    GluingMismatch(String),
    #[error("point lies outside every block of the diagram: {0}")]
    OutOfBlockRange(String),
    #[error("datum lies on a horizon: {0}")]
    OnHorizonDatum(String),
    #[error("shooting did not converge: {0}")]
    NoConvergence(String),
    #[error("forcing constant search exceeded cap {0}")]
    ForcingSearchFailed(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Validation errors come from bad inputs; everything else is a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonpositiveMass(_)
                | Error::SubextremalityViolated { .. }
                | Error::NonpositiveRadius(_)
                | Error::OnHorizon(_)
                | Error::OutOfDomain { .. }
                | Error::SpacelikeViolated(_)
                | Error::WrongRegion { .. }
                | Error::EmptyDomain(_)
                | Error::NoThroat { .. }
                | Error::OutOfBlockRange(_)
                | Error::OnHorizonDatum(_)
                | Error::InvalidParameter(_)
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonpositiveMass(_) => "NonpositiveMass",
            Error::SubextremalityViolated { .. } => "SubextremalityViolated",
            Error::NonpositiveRadius(_) => "NonpositiveRadius",
            Error::OnHorizon(_) => "OnHorizon",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::BracketingFailed(_) => "BracketingFailed",
            Error::SpacelikeViolated(_) => "SpacelikeViolated",
            Error::WrongRegion { .. } => "WrongRegion",
            Error::EmptyDomain(_) => "EmptyDomain",
            Error::NoThroat { .. } => "NoThroat",
            Error::QuadratureDidNotConverge { .. } => "QuadratureDidNotConverge",
            Error::GluingMismatch(_) => "GluingMismatch",
            Error::OutOfBlockRange(_) => "OutOfBlockRange",
            Error::OnHorizonDatum(_) => "OnHorizonDatum",
            Error::NoConvergence(_) => "NoConvergence",
            Error::ForcingSearchFailed(_) => "ForcingSearchFailed",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
