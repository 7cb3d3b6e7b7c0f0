use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are split into two families: input/configuration problems
/// (see [`Error::is_config`]) and numerical failures encountered while
/// evaluating a valid configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inverse temperature beta = {0} must lie in (0, 1)")]
    BetaOutOfRange(f64),
    #[error("edge probability p = {0} must lie in (0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("system size N = {0} must be positive")]
    NonpositiveN(i64),
    #[error("external field h0 = {0} must be finite")]
    NonFiniteField(f64),
    #[error("effective inverse temperature {0} is outside (0, 1)")]
    EffectiveBetaOutOfRange(f64),
    #[error("y = {y} is outside the admissible region [0, {limit}) for beta' = {beta}")]
    OutsideAdmissibleRegion { beta: f64, y: f64, limit: f64 },

    #[error(
        "partition function is numerically zero at h = {re} + {im}i (Lee-Yang zero proximity)"
    )]
    PartitionNearZero { re: f64, im: f64 },
    #[error("cumulant order {requested} is not supported (allowed 1..={max})")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("brute-force enumeration needs N <= {max}, got {n}")]
    NTooLargeForBruteForce { n: usize, max: usize },

    #[error("h = {re} + {im}i lies outside the holomorphy strip |Im h| < {halfwidth}")]
    OutsideStrip { re: f64, im: f64, halfwidth: f64 },
    #[error("saddle iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("saddle point escaped the strip: |Im s| = {im} > {bound}")]
    StripBoundViolated { im: f64, bound: f64 },
    #[error("second derivative at the saddle has non-negative real part {0}")]
    DegenerateCurvature(f64),
    #[error("|cosh(h + s)| = {0:e} is too close to a pole of log cosh")]
    PoleProximity(f64),
    #[error("|Im(s + h)| = {0} is outside the principal strip of log cosh")]
    OutsidePrincipalStrip(f64),
    #[error("quadrature did not converge (last relative change {0:e})")]
    QuadratureNotConverged(f64),

    #[error("contour radius {radius} is not inside the strip half-width {halfwidth}")]
    ContourExitsStrip { radius: f64, halfwidth: f64 },
    #[error("contour needs at least {required} nodes, got {nodes}")]
    TooFewNodes { nodes: usize, required: usize },
    #[error("phase unwrapping failed near theta = {theta} (partition function zero inside or near the disc)")]
    PhaseUnwrapFailure { theta: f64 },
    #[error("imaginary residue {residue:e} of cumulant {order} exceeds tolerance {tolerance:e}")]
    ImaginaryResidueTooLarge {
        order: usize,
        residue: f64,
        tolerance: f64,
    },

    #[error("tail probability underflows at x = {0}")]
    TailUnderflow(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by invalid inputs rather than numerical breakdown.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::BetaOutOfRange(_)
                | Error::ProbabilityOutOfRange(_)
                | Error::NonpositiveN(_)
                | Error::NonFiniteField(_)
                | Error::EffectiveBetaOutOfRange(_)
                | Error::OutsideAdmissibleRegion { .. }
                | Error::OrderTooHigh { .. }
                | Error::NTooLargeForBruteForce { .. }
                | Error::OutsideStrip { .. }
                | Error::ContourExitsStrip { .. }
                | Error::TooFewNodes { .. }
                | Error::Config(_)
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BetaOutOfRange(_) => "BetaOutOfRange",
            Error::ProbabilityOutOfRange(_) => "ProbabilityOutOfRange",
            Error::NonpositiveN(_) => "NonpositiveN",
            Error::NonFiniteField(_) => "NonFiniteField",
            Error::EffectiveBetaOutOfRange(_) => "EffectiveBetaOutOfRange",
            Error::OutsideAdmissibleRegion { .. } => "OutsideAdmissibleRegion",
            Error::PartitionNearZero { .. } => "PartitionNearZero",
            Error::OrderTooHigh { .. } => "OrderTooHigh",
            Error::NTooLargeForBruteForce { .. } => "NTooLargeForBruteForce",
            Error::OutsideStrip { .. } => "OutsideStrip",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::StripBoundViolated { .. } => "StripBoundViolated",
            Error::DegenerateCurvature(_) => "DegenerateCurvature",
            Error::PoleProximity(_) => "PoleProximity",
            Error::OutsidePrincipalStrip(_) => "OutsidePrincipalStrip",
            Error::QuadratureNotConverged(_) => "QuadratureNotConverged",
            Error::ContourExitsStrip { .. } => "ContourExitsStrip",
            Error::TooFewNodes { .. } => "TooFewNodes",
            Error::PhaseUnwrapFailure { .. } => "PhaseUnwrapFailure",
            Error::ImaginaryResidueTooLarge { .. } => "ImaginaryResidueTooLarge",
            Error::TailUnderflow(_) => "TailUnderflow",
            Error::Config(_) => "ConfigError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
