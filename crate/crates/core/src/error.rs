//! Crate-wide error type.
//!
//! Every fallible operation in this crate reports failures through [`Error`].
//! Variants carry enough context (anchor ids, pair ids, file positions) for a
//! caller to produce an actionable message without extra lookups.

use std::path::PathBuf;

use crate::plan::{AnchorId, ZoneId};

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A floor plan failed validation.
    #[error("invalid floor plan: {0}")]
    InvalidPlan(String),

    /// An anchor pair was constructed from a single anchor.
    #[error("anchor pair must reference two distinct anchors, got ({0}, {0})")]
    DegeneratePair(AnchorId),

    /// A pair set was constructed with fewer than two pairs.
    #[error("pair set needs at least 2 pairs, got {0}")]
    PairSetTooSmall(usize),

    /// Enumeration rule parameters are inconsistent.
    #[error("invalid enumeration rule: {0}")]
    InvalidRule(String),

    /// A pair references an anchor that is absent from a TOA map or plan.
    #[error("pair ({first}, {second}) references anchor {missing} which is not available")]
    MissingAnchor {
        /// First anchor of the offending pair.
        first: AnchorId,
        /// Second anchor of the offending pair.
        second: AnchorId,
        /// The anchor id that could not be resolved.
        missing: AnchorId,
    },

    /// A bundle does not contain a value for a requested pair.
    #[error("bundle at t = {t} s has no value for pair ({first}, {second})")]
    MissingPair {
        /// Bundle timestamp in seconds.
        t: f64,
        /// First anchor of the missing pair.
        first: AnchorId,
        /// Second anchor of the missing pair.
        second: AnchorId,
    },

    /// A solve was attempted with fewer than two usable measurements.
    #[error("position solve needs at least 2 pair measurements, got {0}")]
    TooFewMeasurements(usize),

    /// A solve was started from a non-finite initial guess.
    #[error("position solve started from a non-finite initial guess")]
    NonFiniteInit,

    /// A path specification cannot be sampled.
    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// A polyline query needs at least two points.
    #[error("polyline needs at least 2 points, got {0}")]
    PolylineTooShort(usize),

    /// An empty value list was given to a statistic that needs data.
    #[error("cannot compute {0} of an empty sample")]
    EmptySample(&'static str),

    /// Calibration was invoked with no aligned samples.
    #[error("calibration has no usable samples: {0}")]
    NoCalibrationData(String),

    /// Calibration produced no candidate sets.
    #[error("enumeration produced no candidate pair sets")]
    NoCandidates,

    /// Tracker initialisation could not produce a converged first fix.
    #[error("tracker initialisation failed: {0}")]
    TrackerInit(String),

    /// Filter configuration parameters violate their invariants.
    #[error("invalid filter configuration: {0}")]
    InvalidFilterConfig(String),

    /// A tracker step was fed a bundle with a non-increasing timestamp.
    #[error("bundle timestamps must strictly increase (previous {previous} s, got {current} s)")]
    NonMonotonicTime {
        /// Timestamp of the previously processed bundle in seconds.
        previous: f64,
        /// Timestamp of the offending bundle in seconds.
        current: f64,
    },

    /// A zone referenced by a zone plan is unknown to the floor plan.
    #[error("zone {0} is not present in the floor plan")]
    UnknownZone(ZoneId),

    /// Reading or writing a data file failed.
    #[error("{path}:{}: {message}", line.map(|l| l.to_string()).unwrap_or_else(|| "-".into()))]
    File {
        /// The file involved.
        path: PathBuf,
        /// 1-based line number when the failure is tied to a line.
        line: Option<usize>,
        /// Human-readable description of the failure.
        message: String,
    },
}

impl Error {
    /// Builds a file error tied to a specific 1-based line.
    pub fn file_line(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            line: Some(line),
            message: message.into(),
        }
    }

    /// Builds a file error that is not tied to a line (open/create failures).
    pub fn file(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            line: None,
            message: message.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
