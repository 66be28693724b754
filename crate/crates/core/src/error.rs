//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants carry
//! enough structure (indices, dimensions, offending values) that callers can
//! render a diagnostic without string-parsing.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
#[non_exhaustive]
pub enum Error {
    /// A data matrix contains a NaN or infinity.
    #[error("non-finite value at row {row}, column {col} ({context})")]
    NonFinite {
        row: usize,
        col: usize,
        context: &'static str,
    },

    /// An ensemble needs at least two series to be useful.
    #[error("ensemble has {n} series; at least 2 are required")]
    TooFewSeries { n: usize },

    /// Not enough time samples for the requested operation.
    #[error("{context}: {t} samples available, at least {min} required")]
    TooFewSamples {
        t: usize,
        min: usize,
        context: &'static str,
    },

    /// Series-name list does not match the data row count.
    #[error("{names} series names supplied for {rows} data rows")]
    NameCountMismatch { names: usize, rows: usize },

    /// A sample period must be finite and strictly positive.
    #[error("sample period {value} is not finite and positive")]
    InvalidSamplePeriod { value: f64 },

    /// Generic shape disagreement between two arguments.
    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Component count for a projection is out of range.
    #[error("component count {p} out of range 1..={max}")]
    ComponentCount { p: usize, max: usize },

    /// A series index does not exist in the ensemble.
    #[error("series index {index} out of range for {n} series")]
    SeriesIndex { index: usize, n: usize },

    /// A (1-based) time index falls outside the valid window.
    #[error("time index {t} outside valid range {min}..={max}")]
    TimeIndex { t: usize, min: usize, max: usize },

    /// Regression with more unknowns than samples.
    #[error("underdetermined fit: {samples} samples for {regressors} regressors")]
    Underdetermined { samples: usize, regressors: usize },

    /// Normal equations were numerically singular even after ridge damping.
    #[error("normal equations are singular (ridge epsilon {ridge})")]
    SingularSystem { ridge: f64 },

    /// A configuration field failed validation.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// Simulated dynamics produced a non-finite state.
    #[error("simulation diverged at step {step}")]
    SimulationDiverged { step: usize },

    /// Recovery scoring needs both edges and non-edges in the ground truth.
    #[error("ground truth has {edges} edges among {pairs} ordered pairs; scoring needs both classes")]
    DegenerateTruth { edges: usize, pairs: usize },

    /// A graph sample failed structural validation.
    #[error("invalid graph sample: {reason}")]
    InvalidGraph { reason: String },

    /// A cached forward pass does not match the sample it is replayed against.
    #[error("stale forward cache: {reason}")]
    StaleCache { reason: &'static str },

    /// Training produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    /// A checkpoint file is malformed or from an unknown version.
    #[error("bad checkpoint: {reason}")]
    BadCheckpoint { reason: String },

    /// Cross-validation folds would leak a subject across the split.
    #[error("fold leakage: {reason}")]
    FoldLeakage { reason: String },

    /// A class has too few subjects for the requested fold count.
    #[error("class {label} has {count} subjects; {folds} folds need at least one each")]
    TooFewSubjects { label: u8, count: usize, folds: usize },

    /// Underlying I/O failure (checkpoint read/write).
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
