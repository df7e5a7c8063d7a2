use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error classes shared by all modules. Variants carry enough context to name
/// the offending quantity in CLI output.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("tail integral of 1/(a f(a)) does not converge; g is undefined ({0})")]
    DivergentTail(String),
    #[error("quadrature cannot certify requested tolerance {requested:e} (achieved {achieved:e})")]
    ToleranceNotMet { requested: f64, achieved: f64 },
    #[error("argument {value} outside valid range {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("sample {0:?} lies outside the strip -delta < r < 0")]
    SampleOutsideStrip([f64; 4]),
    #[error("grid has no interior nodes (spacing {0} too coarse)")]
    DegenerateGrid(f64),
    #[error("ray from interior anchor exits the bounding box before crossing the boundary")]
    RootNotBracketed,
    #[error("domain {0} is not flagged convex; linear supporting peaks are not available")]
    NonConvexDomain(String),
    #[error("peak family failed validation: {0}")]
    PeakFamilyInvalid(String),
    #[error("constant ledger violation: {0}")]
    LedgerViolation(String),
    #[error("fields live on different grids ({0} vs {1} nodes)")]
    GridMismatch(usize, usize),
    #[error("translation by {0:?} leaves the grid lattice")]
    ShiftOutsideGrid([f64; 4]),
    #[error("stencil neighbor missing at node {0}")]
    MissingNeighbor(usize),
    #[error("matrix is not positive semidefinite within tolerance (witness {0:e})")]
    NotPSD(f64),
    #[error("radial axis value r = 0 with field not smooth at the axis")]
    AxisSingularity,
    #[error("per-node quadratic has negative discriminant {0:e}; invariant violated")]
    NegativeDiscriminant(f64),
    #[error("solver did not converge: final update {final_update:e} after {sweeps} sweeps")]
    NotConverged { sweeps: usize, final_update: f64 },
    #[error("radial mode invalid: {0}")]
    RadialModeInvalid(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("membership verdict needs at least {needed} scales, report has {got}")]
    InsufficientScales { needed: usize, got: usize },
    #[error("point {0:?} lies outside the domain closure")]
    OutsideDomain([f64; 4]),
    #[error("invalid config key `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },
}
