//! Zone-adaptive anchor-pair selection for UWB TDOA indoor positioning.
//!
//! This crate implements, end to end, a desk-scale testbed for a positioning
//! strategy in which an ultra-wideband TDOA system does not use one fixed set
//! of anchor pairs everywhere, but calibrates, per floor-plan zone, the pair
//! set that minimises localisation error there, and switches sets online as
//! the tag moves between zones.
//!
//! The pipeline has five stages, one module each:
//!
//! 1. [`sim`] synthesises per-anchor times of arrival along a trajectory over
//!    a [`plan::FloorPlan`], including per-wall and per-obstacle excess
//!    delays, plus a noisy ground-reference track.
//! 2. [`pairs`] enumerates every candidate pair set admissible under the
//!    selection constraints.
//! 3. [`solver`] estimates positions from range differences by damped
//!    (Levenberg-Marquardt) nonlinear least squares.
//! 4. [`calibrate`] scores every candidate set against the reference track,
//!    zone by zone, and picks per-zone winners.
//! 5. [`tracker`] runs the online loop: rough solve with the active set, zone
//!    detection and set switching, then an unscented Kalman filter refinement.
//!
//! [`eval`] computes the error statistics and ECDFs used to compare fixed
//! and adaptive configurations, and [`io`] reads and writes the file formats
//! shared with the command-line tool.
//!
//! All numeric code is generic over the scalar type via [`real::Real`];
//! `f64` is the default throughout the type aliases at the crate root
//! ([`Point2d`], [`FloorPlan64`], ...), while `f32` remains available for
//! memory- or throughput-bound experiments.

pub mod calibrate;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod pairs;
pub mod plan;
pub mod real;
pub mod sim;
pub mod solver;
pub mod tracker;
pub mod ukf;

pub use calibrate::{calibrate, CalibrationConfig, CalibrationOutcome, ZoneEntry, ZonePlan};
pub use error::{Error, Result};
pub use eval::{ecdf, percentile, static_point_eval, summarize, trajectory_errors, EvalReport};
pub use geometry::Point2;
pub use measure::{AnchorPair, PairSet, ReferenceFix, TdoaBundle, TrackedFix};
pub use pairs::{enumerate_pair_sets, EnumerationRule};
pub use plan::{Anchor, AnchorId, FloorPlan, Obstacle, Wall, Zone, ZoneId};
pub use real::{Real, SPEED_OF_LIGHT_M_PER_NS};
pub use sim::{excess_delay, sample_path, simulate_drive, DriveLog, NoiseModel, PathSpec};
pub use solver::{predict_tdoa, solve, FixResult, SolverConfig};
pub use tracker::{init_tracker, step, TrackerConfig, TrackerState, UkfConfig};
pub use ukf::GaussianState;

/// 2-D point in double precision, the default scalar type.
pub type Point2d = geometry::Point2<f64>;
/// 2-D point in single precision.
pub type Point2f = geometry::Point2<f32>;
/// Floor plan in double precision, the default scalar type.
pub type FloorPlan64 = plan::FloorPlan<f64>;
/// Floor plan in single precision.
pub type FloorPlan32 = plan::FloorPlan<f32>;
