//! Online zone-adaptive tracking.
//!
//! Each epoch runs the three-step loop the toolkit is built around:
//!
//! 1. **Rough fix** — a least-squares solve of the epoch's bundle with the
//!    currently active pair set, initialised at the filter's position. The
//!    warm start keeps the solve on the branch of the hyperbolae the target
//!    actually occupies.
//! 2. **Zone detection and set switch** — the rough fix is located on the
//!    floor plan; when it falls in a zone with a calibrated entry, the active
//!    set switches to that entry (optionally after a configurable number of
//!    consecutive confirmations, to avoid flapping on zone boundaries).
//! 3. **Filter refinement** — an unscented Kalman filter predicts the
//!    constant-velocity state over the elapsed time and folds in the range
//!    differences of the active set. Its posterior mean is the epoch's output
//!    and the next epoch's warm start.
//!
//! State is carried explicitly: [`step`] consumes a [`TrackerState`] and a
//! bundle and returns the successor state plus a [`TrackedFix`]. Replaying a
//! logged drive therefore reproduces the exact zone/set sequence.

use nalgebra::Vector4;

use crate::calibrate::ZonePlan;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::measure::{PairSet, TdoaBundle, TrackedFix};
use crate::plan::{anchor_position, FloorPlan, ZoneId};
use crate::real::Real;
use crate::solver::{set_anchor_centroid, solve, SolverConfig};
use crate::ukf::{predict_cv, update, GaussianState, UkfParams};

/// Unscented-filter tuning for the refinement stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfConfig<T> {
    /// Continuous white-acceleration density, m/s² (process noise).
    pub process_noise_accel: T,
    /// Sigma-point spread (0 < alpha <= 1).
    pub alpha: T,
    /// Prior-distribution weighting (2 is optimal for Gaussians).
    pub beta: T,
    /// Secondary scaling, usually 0.
    pub kappa: T,
    /// Standard deviation of one range-difference measurement, metres.
    pub measurement_noise_sigma: T,
    /// Initial position standard deviation, metres.
    pub init_pos_sigma: T,
    /// Initial velocity standard deviation, m/s.
    pub init_vel_sigma: T,
}

impl<T: Real> Default for UkfConfig<T> {
    fn default() -> Self {
        Self {
            process_noise_accel: T::lit(0.5),
            alpha: T::lit(0.5),
            beta: T::lit(2.0),
            kappa: T::zero(),
            measurement_noise_sigma: T::lit(0.18),
            init_pos_sigma: T::one(),
            init_vel_sigma: T::lit(0.5),
        }
    }
}

impl<T: Real> UkfConfig<T> {
    /// Checks the parameter invariants: all sigmas positive, 0 < alpha <= 1.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("process_noise_accel", self.process_noise_accel),
            ("measurement_noise_sigma", self.measurement_noise_sigma),
            ("init_pos_sigma", self.init_pos_sigma),
            ("init_vel_sigma", self.init_vel_sigma),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= T::zero() {
                return Err(Error::InvalidFilterConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !self.alpha.is_finite() || self.alpha <= T::zero() || self.alpha > T::one() {
            return Err(Error::InvalidFilterConfig(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// The unscented-transform parameters of this configuration.
    pub fn params(&self) -> UkfParams<T> {
        UkfParams {
            alpha: self.alpha,
            beta: self.beta,
            kappa: self.kappa,
        }
    }
}

/// Everything a tracker instance needs besides its mutable state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig<T> {
    /// Least-squares configuration for the rough fix.
    pub solver: SolverConfig<T>,
    /// Unscented-filter tuning.
    pub ukf: UkfConfig<T>,
    /// Consecutive epochs a new zone must be detected before the pair set
    /// switches. 1 switches immediately; larger values damp boundary
    /// flapping.
    pub switch_confirmations: u32,
}

impl<T: Real> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            ukf: UkfConfig::default(),
            switch_confirmations: 1,
        }
    }
}

/// The carried state of one tracked tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState<T: Real> {
    /// Filtered Gaussian belief over `[x, y, vx, vy]`.
    pub gaussian: GaussianState<T>,
    /// Zone the most recent converged rough fix fell in, if any.
    pub active_zone: Option<ZoneId>,
    /// Pair set the tracker currently solves and filters with.
    pub active_set: PairSet,
    /// Timestamp of the last processed bundle, seconds.
    pub last_t: T,
    /// Zone-switch candidate and its consecutive-confirmation count.
    pending_switch: Option<(ZoneId, u32)>,
}

impl<T: Real> TrackerState<T> {
    /// The filtered position estimate.
    pub fn position(&self) -> Point2<T> {
        self.gaussian.position()
    }
}

/// Bootstraps a tracker from the first bundle of a drive.
///
/// The position comes from a least-squares solve with the zone plan's
/// default set, started at that set's anchor centroid; velocity starts at
/// zero with the configured initial sigmas. A non-converged solve returns
/// [`Error::TrackerInit`] — the caller simply retries with the next bundle.
pub fn init_tracker<T: Real>(
    plan: &FloorPlan<T>,
    zone_plan: &ZonePlan<T>,
    first_bundle: &TdoaBundle<T>,
    cfg: &TrackerConfig<T>,
) -> Result<TrackerState<T>> {
    cfg.ukf.validate()?;
    let init = set_anchor_centroid(&zone_plan.default_set, plan.anchors())?;
    let fix = solve(
        first_bundle,
        &zone_plan.default_set,
        plan.anchors(),
        init,
        &cfg.solver,
    )?;
    if !fix.converged {
        return Err(Error::TrackerInit(format!(
            "initial least-squares solve did not converge after {} iterations",
            fix.iterations
        )));
    }
    Ok(TrackerState {
        gaussian: GaussianState::at_rest(
            fix.position,
            cfg.ukf.init_pos_sigma,
            cfg.ukf.init_vel_sigma,
        ),
        active_zone: plan.zone_of(fix.position),
        active_set: zone_plan.default_set.clone(),
        last_t: first_bundle.t,
        pending_switch: None,
    })
}

/// Advances the tracker by one measurement epoch.
///
/// Returns the successor state and the epoch's output fix. The bundle must
/// carry a strictly later timestamp and values for every pair of the active
/// set; when the active set cannot be served, the epoch falls back to the
/// zone plan's default set (the persistent active set is not changed by the
/// fallback). A non-converged rough fix skips zone detection for the epoch
/// but still runs the filter.
pub fn step<T: Real>(
    state: &TrackerState<T>,
    bundle: &TdoaBundle<T>,
    plan: &FloorPlan<T>,
    zone_plan: &ZonePlan<T>,
    cfg: &TrackerConfig<T>,
) -> Result<(TrackerState<T>, TrackedFix<T>)> {
    // `partial_cmp` keeps a NaN timestamp on the rejecting side.
    if bundle.t.partial_cmp(&state.last_t) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NonMonotonicTime {
            previous: state.last_t.to_f64().unwrap_or(f64::NAN),
            current: bundle.t.to_f64().unwrap_or(f64::NAN),
        });
    }

    // The set this epoch is solved and filtered with.
    let mut epoch_set = if bundle.contains_all(&state.active_set) {
        state.active_set.clone()
    } else if bundle.contains_all(&zone_plan.default_set) {
        zone_plan.default_set.clone()
    } else {
        let missing = state
            .active_set
            .iter()
            .find(|pair| bundle.get(pair).is_none())
            .expect("contains_all failed, so some pair is missing");
        return Err(Error::MissingPair {
            t: bundle.t.to_f64().unwrap_or(f64::NAN),
            first: missing.first(),
            second: missing.second(),
        });
    };

    // 1. Rough least-squares fix, warm-started at the filtered position.
    let rough = solve(
        bundle,
        &epoch_set,
        plan.anchors(),
        state.gaussian.position(),
        &cfg.solver,
    )?;

    // 2. Zone detection on the rough fix and, when confirmed, set switch.
    let mut active_zone = state.active_zone;
    let mut active_set = state.active_set.clone();
    let mut pending_switch = state.pending_switch;
    if rough.converged {
        active_zone = plan.zone_of(rough.position);
        pending_switch = None;
        if let Some(zone) = active_zone {
            if let Some(entry) = zone_plan.zones.get(&zone) {
                if entry.set != active_set {
                    let count = match state.pending_switch {
                        Some((candidate, n)) if candidate == zone => n.saturating_add(1),
                        _ => 1,
                    };
                    if count >= cfg.switch_confirmations && bundle.contains_all(&entry.set) {
                        active_set = entry.set.clone();
                        epoch_set = entry.set.clone();
                    } else {
                        pending_switch = Some((zone, count));
                    }
                }
            }
        }
    }

    // 3. Filter: constant-velocity predict over the gap, unscented update
    // with the epoch's range differences.
    let dt = bundle.t - state.last_t;
    let predicted = predict_cv(&state.gaussian, dt, cfg.ukf.process_noise_accel);

    let mut geometry = Vec::with_capacity(epoch_set.len());
    let mut z = Vec::with_capacity(epoch_set.len());
    for pair in &epoch_set {
        let resolve = |id| {
            anchor_position(plan.anchors(), id).ok_or(Error::MissingAnchor {
                first: pair.first(),
                second: pair.second(),
                missing: id,
            })
        };
        geometry.push((resolve(pair.first())?, resolve(pair.second())?));
        z.push(bundle.get(pair).expect("epoch set is fully present"));
    }
    let h = |x: &Vector4<T>| {
        let p = Point2::new(x[0], x[1]);
        geometry
            .iter()
            .map(|(a, b)| p.distance(a) - p.distance(b))
            .collect()
    };
    let posterior = update(
        &predicted,
        &z,
        h,
        cfg.ukf.measurement_noise_sigma,
        &cfg.ukf.params(),
    );

    let fix = TrackedFix {
        t: bundle.t,
        position: posterior.position(),
        zone: active_zone,
        set_used: epoch_set,
        rough: Some(rough.position),
    };
    let next = TrackerState {
        gaussian: posterior,
        active_zone,
        active_set,
        last_t: bundle.t,
        pending_switch,
    };
    Ok((next, fix))
}
