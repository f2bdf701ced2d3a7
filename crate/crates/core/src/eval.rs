//! Error metrics, distribution summaries and the static-point benchmark.
//!
//! Percentiles use the nearest-rank convention — the `p`-th percentile of a
//! sample of size `n` is the value at 1-based rank `ceil(p/100 · n)` in the
//! sorted sample — so every reported percentile is an actual sample value and
//! trivially checkable against a sort.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon_strict, point_to_polyline_distance, Point2};
use crate::measure::{all_pairs, PairSet, TrackedFix};
use crate::plan::FloorPlan;
use crate::real::Real;
use crate::sim::{simulate_bundle, NoiseModel};
use crate::solver::{set_anchor_centroid, solve, SolverConfig};
use crate::calibrate::ZonePlan;

/// Label of the zone-adaptive source in evaluation reports.
pub const ADAPTIVE_LABEL: &str = "adaptive";

/// Tuning of the static-point benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticEvalConfig<T> {
    /// Solver used for every fix.
    pub solver: SolverConfig<T>,
    /// Error charged for a non-converged solve, and the cap applied to
    /// converged ones, in metres. Keeps a runaway fix from dominating the
    /// statistics while still counting it as a gross miss.
    pub penalty_m: T,
}

impl<T: Real> Default for StaticEvalConfig<T> {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            penalty_m: T::lit(10.0),
        }
    }
}

/// Aggregate statistics of one error sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceStats<T> {
    /// Root mean square error, metres.
    pub rmse: T,
    /// Nearest-rank median, metres.
    pub median: T,
    /// Nearest-rank 80th percentile, metres.
    pub p80: T,
    /// Largest error, metres.
    pub max: T,
    /// Number of samples aggregated.
    pub samples: usize,
}

/// Statistics per labeled error source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport<T> {
    /// Source label → aggregate statistics.
    pub sources: BTreeMap<String, SourceStats<T>>,
}

/// Empirical cumulative distribution function, as plot-ready steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfTable<T> {
    /// Distinct sample values, ascending, metres.
    pub values: Vec<T>,
    /// `P(sample <= value)` for each entry; strictly increasing to 1.
    pub probabilities: Vec<T>,
}

/// Nearest-rank percentile of an unsorted sample.
///
/// `p` is in percent (0–100). Returns the value at 1-based rank
/// `ceil(p/100 · n)`, clamped to the sample; `p = 0` yields the minimum,
/// `p = 100` the maximum.
pub fn percentile<T: Real>(values: &[T], p: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptySample("percentile"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("error samples are ordered"));
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Summarises an error sample into [`SourceStats`].
pub fn summarize<T: Real>(values: &[T]) -> Result<SourceStats<T>> {
    if values.is_empty() {
        return Err(Error::EmptySample("summary"));
    }
    let n = T::from_usize(values.len()).expect("sample size fits the scalar");
    let sum_sq = values.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let max = values
        .iter()
        .copied()
        .fold(T::zero(), |acc: T, v| acc.max(v));
    Ok(SourceStats {
        rmse: (sum_sq / n).sqrt(),
        median: percentile(values, 50.0)?,
        p80: percentile(values, 80.0)?,
        max,
        samples: values.len(),
    })
}

/// Step ECDF of a sample: `P(v) = (#samples <= v) / n` at each distinct
/// sorted value.
pub fn ecdf<T: Real>(values: &[T]) -> Result<EcdfTable<T>> {
    if values.is_empty() {
        return Err(Error::EmptySample("ecdf"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("error samples are ordered"));
    let n = T::from_usize(sorted.len()).expect("sample size fits the scalar");
    let mut table = EcdfTable {
        values: Vec::new(),
        probabilities: Vec::new(),
    };
    for (i, &v) in sorted.iter().enumerate() {
        let is_last_of_value = sorted.get(i + 1).is_none_or(|&next| next > v);
        if is_last_of_value {
            table.values.push(v);
            table
                .probabilities
                .push(T::from_usize(i + 1).expect("rank fits the scalar") / n);
        }
    }
    Ok(table)
}

/// Distance from each fix of a track to the reference path polyline.
pub fn trajectory_errors<T: Real>(
    track: &[TrackedFix<T>],
    reference_path: &[Point2<T>],
) -> Result<Vec<T>> {
    track
        .iter()
        .map(|fix| point_to_polyline_distance(fix.position, reference_path))
        .collect()
}

/// A uniform grid of candidate tag positions clipped to the floor plan:
/// cell centres (offset half a spacing from the zones' bounding box) that
/// lie in some zone and not strictly inside any obstacle. Centring keeps
/// points off zone boundaries and walls, where "the point's zone" would be
/// ambiguous.
pub fn grid_points<T: Real>(plan: &FloorPlan<T>, spacing: T) -> Vec<Point2<T>> {
    // `partial_cmp` keeps a NaN spacing on the rejecting side.
    if spacing.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Vec::new();
    }
    let mut bounds: Option<(Point2<T>, Point2<T>)> = None;
    for zone in plan.zones() {
        for v in &zone.boundary {
            let (min, max) = bounds.get_or_insert((*v, *v));
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
    }
    let Some((min, max)) = bounds else {
        return Vec::new();
    };
    let half = spacing * T::lit(0.5);
    let mut points = Vec::new();
    let mut y = min.y + half;
    while y < max.y {
        let mut x = min.x + half;
        while x < max.x {
            let p = Point2::new(x, y);
            let blocked = plan
                .obstacles()
                .iter()
                .any(|o| point_in_polygon_strict(p, &o.boundary));
            if !blocked && plan.zone_of(p).is_some() {
                points.push(p);
            }
            x += spacing;
        }
        y += spacing;
    }
    points
}

/// Benchmarks static localisation accuracy across labeled solver sources.
///
/// For every point, `repeats` measurement epochs are simulated (all sources
/// see the same bundles) and each source — one per fixed set, plus the
/// zone-adaptive source when a zone plan is given — solves every epoch from
/// its set's anchor centroid. The zone-adaptive source picks its set by the
/// point's true zone. A point contributes its mean error over the repeats;
/// the report aggregates those means over points, per source.
///
/// The error of an epoch is the distance from the solver output to the true
/// point — a biased local solution is exactly the failure mode the benchmark
/// exists to expose — capped at `cfg.penalty_m`, which is also what a
/// non-converged solve is charged.
pub fn static_point_eval<T: Real>(
    points: &[Point2<T>],
    plan: &FloorPlan<T>,
    noise: &NoiseModel<T>,
    sets: &[PairSet],
    zone_plan: Option<&ZonePlan<T>>,
    repeats: NonZeroUsize,
    cfg: &StaticEvalConfig<T>,
) -> Result<EvalReport<T>> {
    if points.is_empty() {
        return Err(Error::EmptySample("static evaluation points"));
    }
    let anchor_ids: Vec<_> = plan.anchors().iter().map(|a| a.id).collect();
    let pairs = all_pairs(&anchor_ids);

    struct Source<'a, T> {
        label: String,
        set: &'a PairSet,
        init: Point2<T>,
        point_means: Vec<T>,
    }
    let mut sources: Vec<Source<'_, T>> = Vec::new();
    for set in sets {
        sources.push(Source {
            label: format!("fixed {set}"),
            set,
            init: set_anchor_centroid(set, plan.anchors())?,
            point_means: Vec::with_capacity(points.len()),
        });
    }

    let mut rng = noise.rng();
    let mut adaptive_means: Vec<T> = Vec::with_capacity(points.len());
    for &point in points {
        let adaptive_set = zone_plan.map(|zp| zp.set_for(plan.zone_of(point)));
        let adaptive_init = adaptive_set
            .map(|set| set_anchor_centroid(set, plan.anchors()))
            .transpose()?;

        let epoch_error = |fix: &crate::solver::FixResult<T>| {
            if fix.converged {
                fix.position.distance(&point).min(cfg.penalty_m)
            } else {
                cfg.penalty_m
            }
        };
        let mut sums = vec![T::zero(); sources.len()];
        let mut adaptive_sum = T::zero();
        for k in 0..repeats.get() {
            let t = T::from_usize(k).expect("repeat index fits the scalar");
            let bundle = simulate_bundle(t, point, plan, &pairs, noise, &mut rng)?;
            for (source, sum) in sources.iter().zip(&mut sums) {
                let fix = solve(&bundle, source.set, plan.anchors(), source.init, &cfg.solver)?;
                *sum += epoch_error(&fix);
            }
            if let (Some(set), Some(init)) = (adaptive_set, adaptive_init) {
                let fix = solve(&bundle, set, plan.anchors(), init, &cfg.solver)?;
                adaptive_sum += epoch_error(&fix);
            }
        }
        let scale = T::one() / T::from_usize(repeats.get()).expect("repeats fits the scalar");
        for (source, sum) in sources.iter_mut().zip(&sums) {
            source.point_means.push(*sum * scale);
        }
        if zone_plan.is_some() {
            adaptive_means.push(adaptive_sum * scale);
        }
    }

    let mut report = EvalReport::default();
    for source in &sources {
        report
            .sources
            .insert(source.label.clone(), summarize(&source.point_means)?);
    }
    if zone_plan.is_some() {
        report
            .sources
            .insert(ADAPTIVE_LABEL.into(), summarize(&adaptive_means)?);
    }
    Ok(report)
}
