//! Nonlinear least-squares position estimation from range differences.
//!
//! For a tag position `x` and an anchor pair `(f, s)` the model predicts the
//! range difference `p(x) = |x - a_f| - |x - a_s|`. Given a bundle of
//! measured range differences restricted to a pair set, the solver minimises
//! the sum of squared residuals `r_i = measured_i - p_i(x)` over the 2-D
//! position with a damped Gauss-Newton (Levenberg-Marquardt) iteration:
//!
//! ```text
//! (J'J + lambda I) delta = J' r,     x <- x + delta on improvement,
//! ```
//!
//! with the damping multiplied by 10 on a rejected step and by 0.1 on an
//! accepted one. Convergence is declared when the gradient infinity-norm
//! falls below `gradient_tol` or an accepted step is shorter than `step_tol`.
//!
//! The cost surface of range-difference multilateration is multimodal, so a
//! single descent can stall in a spurious minimum when started far from the
//! tag. [`solve`] therefore also descends from a fixed family of auxiliary
//! starts spread over the anchor geometry — but keeps the result reached from
//! the caller's initial guess unless an auxiliary minimum is *clearly* deeper
//! (four times lower cost). A caller with a good prior (e.g. the tracker)
//! thus keeps its basin and the ambiguity resolution it implies, while cold
//! starts get rescued from stray minima. Everything is deterministic.
//!
//! The returned [`FixResult::converged`] flag must be honoured by callers:
//! non-converged positions are still finite and usable as warm starts, but
//! should not be trusted as fixes.

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::measure::{AnchorPair, PairSet, TdoaBundle};
use crate::plan::{anchor_position, Anchor};
use crate::real::Real;

/// Damped least-squares iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Maximum number of outer iterations (each attempts one step).
    pub max_iterations: usize,
    /// Convergence threshold on the gradient infinity-norm, in metres.
    pub gradient_tol: T,
    /// Convergence threshold on the length of an accepted step, in metres.
    pub step_tol: T,
    /// Initial damping factor `lambda`.
    pub initial_damping: T,
    /// Whether to also descend from auxiliary starts (see module docs).
    /// Leave on unless the initial guess is known to be reliable, as in a
    /// warm-started solve chain.
    pub multi_start: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tol: T::lit(1e-8),
            step_tol: T::lit(1e-10),
            initial_damping: T::lit(1e-3),
            multi_start: true,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    /// This configuration with auxiliary starts switched on or off.
    pub fn with_multi_start(self, multi_start: bool) -> Self {
        Self {
            multi_start,
            ..self
        }
    }
}

/// Result of one position solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixResult<T> {
    /// Estimated tag position in metres.
    pub position: Point2<T>,
    /// Root-mean-square of the final residuals, in metres.
    pub residual_rmse: T,
    /// Number of outer iterations performed.
    pub iterations: usize,
    /// True when a convergence criterion was met within the iteration budget.
    pub converged: bool,
}

/// One linearisable measurement: two anchor positions and the measured range
/// difference `|x - first| - |x - second|` in metres.
type Row<T> = (Point2<T>, Point2<T>, T);

/// Predicted range difference for a tag at `x` and the given pair.
pub fn predict_tdoa<T: Real>(
    x: Point2<T>,
    pair: &AnchorPair,
    anchors: &[Anchor<T>],
) -> Result<T> {
    let missing = |id| Error::MissingAnchor {
        first: pair.first(),
        second: pair.second(),
        missing: id,
    };
    let a = anchor_position(anchors, pair.first()).ok_or_else(|| missing(pair.first()))?;
    let b = anchor_position(anchors, pair.second()).ok_or_else(|| missing(pair.second()))?;
    Ok(x.distance(&a) - x.distance(&b))
}

/// Mean position of the distinct anchors used by a pair set; the default
/// initial guess when nothing better is known.
pub fn set_anchor_centroid<T: Real>(set: &PairSet, anchors: &[Anchor<T>]) -> Result<Point2<T>> {
    let mut sum = Point2::origin();
    let mut count = 0usize;
    let mut seen: Vec<crate::plan::AnchorId> = Vec::new();
    for pair in set {
        for id in [pair.first(), pair.second()] {
            if !seen.contains(&id) {
                seen.push(id);
                let p = anchor_position(anchors, id).ok_or(Error::MissingAnchor {
                    first: pair.first(),
                    second: pair.second(),
                    missing: id,
                })?;
                sum = sum + p;
                count += 1;
            }
        }
    }
    Ok(sum * (T::one() / T::from_usize(count).expect("set is non-empty")))
}

/// Solves for the tag position from the bundle values of one pair set.
///
/// Errors when the bundle lacks a value for any pair of the set, when an
/// anchor id cannot be resolved, or when fewer than two measurements remain.
/// A non-finite `init` is rejected; an `init` coinciding with an anchor is
/// nudged by 1e-6 m so the first Jacobian is well defined.
pub fn solve<T: Real>(
    bundle: &TdoaBundle<T>,
    set: &PairSet,
    anchors: &[Anchor<T>],
    init: Point2<T>,
    cfg: &SolverConfig<T>,
) -> Result<FixResult<T>> {
    let mut rows: Vec<Row<T>> = Vec::with_capacity(set.len());
    for pair in set {
        let value = bundle.get(pair).ok_or_else(|| Error::MissingPair {
            t: bundle.t.to_f64().unwrap_or(f64::NAN),
            first: pair.first(),
            second: pair.second(),
        })?;
        let missing = |id| Error::MissingAnchor {
            first: pair.first(),
            second: pair.second(),
            missing: id,
        };
        let a = anchor_position(anchors, pair.first()).ok_or_else(|| missing(pair.first()))?;
        let b = anchor_position(anchors, pair.second()).ok_or_else(|| missing(pair.second()))?;
        rows.push((a, b, value));
    }
    solve_rows(&rows, init, cfg)
}

/// How much lower (in final cost) an auxiliary start must come out before it
/// displaces the result reached from the caller's own initial guess. Keeping
/// the init basin unless another one is clearly deeper lets a tracker prior
/// disambiguate near-symmetric hyperbola intersections, while still escaping
/// the far-from-optimal local minima a cold start can fall into.
const BASIN_KEEP_FACTOR: f64 = 4.0;

fn solve_rows<T: Real>(
    rows: &[Row<T>],
    init: Point2<T>,
    cfg: &SolverConfig<T>,
) -> Result<FixResult<T>> {
    if rows.len() < 2 {
        return Err(Error::TooFewMeasurements(rows.len()));
    }
    if !init.is_finite() {
        return Err(Error::NonFiniteInit);
    }

    let m = T::from_usize(rows.len()).unwrap();
    let primary = lm_from(rows, init, cfg);

    // Fast paths: auxiliary starts disabled, or an essentially exact fit
    // that cannot be improved upon.
    let exact_cost = m * T::lit(1e-18);
    if !cfg.multi_start || (primary.1 <= exact_cost && primary.0.converged) {
        return Ok(primary.0);
    }

    // The TDOA cost surface is multimodal; retry from deterministic starts
    // spread over the anchor geometry and keep the primary result unless a
    // clearly deeper minimum turns up. A converged run always outranks a
    // non-converged one regardless of cost: under noise the infimum of the
    // cost can lie at infinity along a hyperbola asymptote, and the run that
    // chased it reports a lower cost than the legitimate interior minimum.
    let mut best_aux: Option<(FixResult<T>, T)> = None;
    let mut extra_iterations = 0usize;
    for start in auxiliary_starts(rows, init) {
        let run = lm_from(rows, start, cfg);
        extra_iterations += run.0.iterations;
        let better = match &best_aux {
            None => true,
            Some((best, cost)) => {
                if run.0.converged != best.converged {
                    run.0.converged
                } else {
                    run.1 < *cost
                }
            }
        };
        if better {
            best_aux = Some(run);
        }
        if let Some((r, cost)) = &best_aux {
            if *cost <= exact_cost && r.converged {
                break;
            }
        }
    }

    let (primary_fix, primary_cost) = primary;
    let total_iterations = primary_fix.iterations + extra_iterations;
    let mut result = primary_fix;
    if let Some((aux, aux_cost)) = best_aux {
        let take_aux = if aux.converged != result.converged {
            aux.converged
        } else {
            let keep_primary =
                result.converged && primary_cost <= T::lit(BASIN_KEEP_FACTOR) * aux_cost;
            !keep_primary && aux_cost < primary_cost
        };
        if take_aux {
            result = aux;
        }
    }
    result.iterations = total_iterations;
    Ok(result)
}

/// One damped least-squares descent from a single starting point.
/// Returns the fix and its final cost (sum of squared residuals).
fn lm_from<T: Real>(rows: &[Row<T>], init: Point2<T>, cfg: &SolverConfig<T>) -> (FixResult<T>, T) {
    let nudge = T::lit(1e-6);
    let mut x = init;
    if rows
        .iter()
        .any(|(a, b, _)| x.distance(a) < nudge || x.distance(b) < nudge)
    {
        x = Point2::new(x.x + nudge, x.y + nudge);
    }

    let lambda_min = T::lit(1e-12);
    let lambda_max = T::lit(1e12);
    let up = T::lit(10.0);
    let down = T::lit(0.1);

    let mut lambda = cfg.initial_damping;
    let mut cost = cost_at(rows, x);
    let mut converged = false;
    let mut iterations = 0usize;

    for _ in 0..cfg.max_iterations {
        iterations += 1;

        let (h00, h01, h11, g0, g1) = normal_equations(rows, x);

        if g0.abs().max(g1.abs()) <= cfg.gradient_tol {
            converged = true;
            break;
        }

        let a00 = h00 + lambda;
        let a11 = h11 + lambda;
        let det = a00 * a11 - h01 * h01;
        if det.abs() < T::lit(1e-300) || !det.is_finite() {
            lambda = (lambda * up).min(lambda_max);
            continue;
        }
        let dx = (a11 * g0 - h01 * g1) / det;
        let dy = (a00 * g1 - h01 * g0) / det;
        let trial = Point2::new(x.x + dx, x.y + dy);
        let trial_cost = cost_at(rows, trial);

        if trial_cost < cost {
            x = trial;
            cost = trial_cost;
            lambda = (lambda * down).max(lambda_min);
            let step = Point2::new(dx, dy).norm();
            if step <= cfg.step_tol {
                converged = true;
                break;
            }
        } else {
            lambda = (lambda * up).min(lambda_max);
        }
    }

    // A small gradient does not guarantee a fully polished residual when the
    // Jacobian is ill conditioned; a couple of undamped Gauss-Newton steps
    // sharpen zero-residual fits to machine precision at negligible cost.
    if converged {
        for _ in 0..2 {
            let (h00, h01, h11, g0, g1) = normal_equations(rows, x);
            let det = h00 * h11 - h01 * h01;
            if det.abs() < T::lit(1e-300) || !det.is_finite() {
                break;
            }
            let trial = Point2::new(
                x.x + (h11 * g0 - h01 * g1) / det,
                x.y + (h00 * g1 - h01 * g0) / det,
            );
            let trial_cost = cost_at(rows, trial);
            if trial_cost < cost {
                x = trial;
                cost = trial_cost;
            } else {
                break;
            }
        }
    }

    // Range-difference cost surfaces flatten out along hyperbola asymptotes,
    // so a descent can stall with a tiny gradient arbitrarily far from the
    // anchors. A solution well outside the deployment geometry is runaway,
    // not a fix; flag it instead of reporting convergence.
    if converged && !within_deployment_bounds(rows, x) {
        converged = false;
    }

    let m = T::from_usize(rows.len()).unwrap();
    (
        FixResult {
            position: x,
            residual_rmse: (cost / m).sqrt(),
            iterations,
            converged,
        },
        cost,
    )
}

/// Whether `x` lies within the anchor bounding box inflated by a generous
/// multiple of its diagonal (50x, at least 50 m). Genuine tag positions sit
/// in or near the deployment area; anything farther is asymptotic runaway.
fn within_deployment_bounds<T: Real>(rows: &[Row<T>], x: Point2<T>) -> bool {
    let mut min = rows[0].0;
    let mut max = rows[0].0;
    for &(a, b, _) in rows {
        for p in [a, b] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
    }
    let diagonal = max.distance(&min);
    let margin = (diagonal * T::lit(50.0)).max(T::lit(50.0));
    x.x >= min.x - margin
        && x.x <= max.x + margin
        && x.y >= min.y - margin
        && x.y <= max.y + margin
}

/// Normal-equation terms at `x`: `(J'J)` entries and `J'r`.
fn normal_equations<T: Real>(rows: &[Row<T>], x: Point2<T>) -> (T, T, T, T, T) {
    let mut h00 = T::zero();
    let mut h01 = T::zero();
    let mut h11 = T::zero();
    let mut g0 = T::zero();
    let mut g1 = T::zero();
    for &(a, b, measured) in rows {
        let (ja, jb, predicted) = row_gradient(x, a, b);
        let r = measured - predicted;
        h00 += ja * ja;
        h01 += ja * jb;
        h11 += jb * jb;
        g0 += ja * r;
        g1 += jb * r;
    }
    (h00, h01, h11, g0, g1)
}

/// Deterministic auxiliary starting points spread over the measurement
/// geometry: the distinct anchor positions, their centroid, and four points
/// offset from the centroid by half the anchor spread.
fn auxiliary_starts<T: Real>(rows: &[Row<T>], init: Point2<T>) -> Vec<Point2<T>> {
    let mut anchors: Vec<Point2<T>> = Vec::with_capacity(rows.len() * 2);
    let close = T::lit(1e-9);
    for &(a, b, _) in rows {
        for p in [a, b] {
            if !anchors.iter().any(|q| q.distance(&p) < close) {
                anchors.push(p);
            }
        }
    }
    let n = T::from_usize(anchors.len().max(1)).unwrap();
    let centroid = anchors
        .iter()
        .fold(Point2::origin(), |acc, p| acc + *p)
        * (T::one() / n);
    let spread = anchors
        .iter()
        .map(|p| p.distance(&centroid))
        .fold(T::zero(), |acc, d| acc.max(d));
    let half = spread * T::lit(0.5);

    let mut starts = anchors;
    starts.push(centroid);
    starts.push(Point2::new(centroid.x + half, centroid.y));
    starts.push(Point2::new(centroid.x - half, centroid.y));
    starts.push(Point2::new(centroid.x, centroid.y + half));
    starts.push(Point2::new(centroid.x, centroid.y - half));
    starts.retain(|p| p.distance(&init) > close);
    starts
}

/// Per-row Jacobian entries and prediction at `x`.
///
/// The gradient of `|x - a| - |x - b|` is the difference of the unit vectors
/// pointing from each anchor towards `x`; an exactly coincident anchor
/// contributes a zero direction.
fn row_gradient<T: Real>(x: Point2<T>, a: Point2<T>, b: Point2<T>) -> (T, T, T) {
    let tiny = T::lit(1e-12);
    let da = x.distance(&a);
    let db = x.distance(&b);
    let (ux, uy) = if da > tiny {
        ((x.x - a.x) / da, (x.y - a.y) / da)
    } else {
        (T::zero(), T::zero())
    };
    let (vx, vy) = if db > tiny {
        ((x.x - b.x) / db, (x.y - b.y) / db)
    } else {
        (T::zero(), T::zero())
    };
    (ux - vx, uy - vy, da - db)
}

fn cost_at<T: Real>(rows: &[Row<T>], x: Point2<T>) -> T {
    rows.iter()
        .map(|&(a, b, measured)| {
            let r = measured - (x.distance(&a) - x.distance(&b));
            r * r
        })
        .fold(T::zero(), |acc, v| acc + v)
}
