use thiserror::Error;

/// Errors surfaced by grid, field, sampling and measurement operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid must have at least 8 points, got {0}")]
    GridTooSmall(usize),
    #[error("grid spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("wavefunction is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },
    #[error("non-finite amplitudes encountered in {context}")]
    NonFinite { context: &'static str },
    #[error("density lies below the node floor at every grid point")]
    AllPointsMasked,
    #[error("field queried inside a masked node region at q = {q}")]
    NodeRegionQuery { q: f64 },
    #[error("position q = {q} is outside the grid extent [{min}, {max})")]
    OutOfDomain { q: f64, min: f64, max: f64 },
    #[error("state has support within {spacings} spacings of the grid boundary")]
    BoundarySupport { spacings: usize },
    #[error("observable fields have {got} points but the grid has {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("sampling density has no unmasked mass")]
    DegenerateDensity,
    #[error("ensemble holds no samples")]
    EmptyEnsemble,
    #[error("ensemble sample count must be at least 1")]
    ZeroSampleCount,
    #[error("xi must be nonzero for the momentum Cramer-Rao check")]
    ZeroXi,
    #[error("xi model moments violate the contract: {0}")]
    BadXiMoments(String),
    #[error("position MS error is grid-limited; the continuum value is unbounded")]
    GridLimited,
    #[error("estimator field vanishes; the classical-limit ratio is undefined")]
    UndefinedRatio,
    #[error("pointer packets need clearance {needed:.3} but the grid offers {available:.3}")]
    PointerOffGrid { needed: f64, available: f64 },
    #[error("readout landed in the inter-packet dead zone {attempts} times; giving up")]
    DeadZoneExhausted { attempts: usize },
    #[error("pointer packets overlap above threshold; increase coupling or duration")]
    PacketsOverlap,
    #[error("conditioning point has zero density gradient; the joint distribution is degenerate")]
    DegenerateConditioning,
    #[error("this diagnostic requires the two-point xi model")]
    XiModelUnsupported,
    #[error("measurement config invalid: {0}")]
    InvalidMeasurementConfig(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("continuity residual needs at least 3 consecutive snapshots, got {0}")]
    TooFewSnapshots(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
