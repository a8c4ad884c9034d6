//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("logarithm undefined: rotation angle {angle} is within {margin} of the branch cut at pi")]
    BranchCut { angle: f64, margin: f64 },

    #[error("no quotient registered for group {0}")]
    NoQuotientRegistered(String),

    #[error("point outside the chart domain: {0}")]
    OutsideChart(String),

    #[error("element is not in the fibre subgroup (residual {residual:.3e})")]
    NotInFibre { residual: f64 },

    #[error("coefficient matrix has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("coefficient matrix violates the invariant-connection conditions: {0}")]
    WangViolation(String),

    #[error("trajectory left the chart domain at t = {t}")]
    LeftChartDomain { t: f64 },

    #[error("loop is not closed: endpoints differ by {0:.3e}")]
    NotClosed(f64),

    #[error("feature dimension mismatch: got {got}, representation expects {want}")]
    DimMismatch { got: usize, want: usize },

    #[error("could not sample points inside the chart after {0} attempts")]
    ChartExhausted(usize),

    #[error("unsupported group for density flows: {0}")]
    UnsupportedGroup(String),

    #[error("density normalization drifted to {mass} at t = {t}; refine the grid or step count")]
    NormalizationDrift { mass: f64, t: f64 },

    #[error("loss diverged to {0:.3e}")]
    Diverged(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
