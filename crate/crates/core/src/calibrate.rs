//! Per-zone pair-set calibration against a ground-reference drive.
//!
//! Calibration answers one question: *which candidate pair set localises best
//! in each zone?* The ingredients are a measurement log (TDOA bundles), a
//! ground-reference track of the same drive, and the floor plan. The stages
//! are:
//!
//! 1. **Alignment** — each bundle is matched to a reference position by
//!    linear interpolation between the bracketing reference fixes; bundles
//!    outside the reference time span are dropped (and counted).
//! 2. **Sweep** — every candidate set from [`crate::pairs::enumerate_pair_sets`]
//!    is scored over the whole drive: positions are solved sequentially (the
//!    previous estimate warm-starts the next solve; the first starts from the
//!    set's anchor centroid) and each error `|estimate - reference|` is
//!    charged to the zone containing the reference position. Errors are
//!    capped at [`CalibrationConfig::penalty_m`], and non-converged solves
//!    are charged the full cap, so one divergent stretch cannot hide or
//!    dominate a set's score. Candidates are scored in parallel.
//! 3. **Selection** — per zone, the candidate with the lowest RMSE wins
//!    (ties: fewer pairs, then lexicographic). A zone with fewer aligned
//!    samples than [`CalibrationConfig::min_zone_samples`] stays
//!    uncalibrated. The candidate with the lowest overall RMSE becomes the
//!    default set, used outside calibrated zones.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::measure::{PairSet, ReferenceFix, TdoaBundle};
use crate::pairs::{enumerate_pair_sets, EnumerationRule};
use crate::plan::{FloorPlan, ZoneId};
use crate::real::Real;
use crate::solver::{set_anchor_centroid, solve, SolverConfig};

/// Parameters of the calibration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig<T> {
    /// Solver settings for the per-sample position fixes.
    pub solver: SolverConfig<T>,
    /// Error cap in metres; also the error charged to non-converged solves.
    pub penalty_m: T,
    /// Minimum aligned samples a zone needs to be calibrated.
    pub min_zone_samples: usize,
    /// A warm-started fix farther than this from its init is treated as a
    /// chain derailment and re-solved with auxiliary starts, in metres.
    pub rescue_jump_m: T,
}

impl<T: Real> Default for CalibrationConfig<T> {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            penalty_m: T::lit(10.0),
            min_zone_samples: 10,
            rescue_jump_m: T::lit(2.0),
        }
    }
}

/// One bundle matched to its interpolated reference position.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSample<T> {
    /// The measurement bundle.
    pub bundle: TdoaBundle<T>,
    /// Reference position interpolated to the bundle timestamp.
    pub reference: Point2<T>,
}

/// Result of aligning a measurement log to a reference track.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    /// Bundles with an in-span reference position, in input order.
    pub samples: Vec<AlignedSample<T>>,
    /// Number of bundles dropped for falling outside the reference span.
    pub dropped: usize,
}

/// Matches bundles to reference positions by timestamp interpolation.
///
/// The reference track must be non-empty with strictly increasing
/// timestamps. Bundles before the first or after the last reference fix are
/// dropped and counted, not errors: logs routinely start or end ragged.
pub fn align_measurements<T: Real>(
    bundles: &[TdoaBundle<T>],
    reference: &[ReferenceFix<T>],
) -> Result<Alignment<T>> {
    if reference.is_empty() {
        return Err(Error::NoCalibrationData("empty reference track".into()));
    }
    // `partial_cmp` keeps NaN timestamps on the rejecting side.
    let strictly_before = |a: T, b: T| a.partial_cmp(&b) == Some(std::cmp::Ordering::Less);
    if reference.windows(2).any(|w| !strictly_before(w[0].t, w[1].t)) {
        return Err(Error::NoCalibrationData(
            "reference timestamps must be strictly increasing".into(),
        ));
    }

    let mut samples = Vec::with_capacity(bundles.len());
    let mut dropped = 0usize;
    for bundle in bundles {
        match interpolate_reference(reference, bundle.t) {
            Some(position) => samples.push(AlignedSample {
                bundle: bundle.clone(),
                reference: position,
            }),
            None => dropped += 1,
        }
    }
    Ok(Alignment { samples, dropped })
}

/// Linear interpolation of the reference track at time `t`, or `None` when
/// `t` lies outside the track's span.
fn interpolate_reference<T: Real>(reference: &[ReferenceFix<T>], t: T) -> Option<Point2<T>> {
    let first = reference.first()?;
    let last = reference.last()?;
    if t < first.t || t > last.t {
        return None;
    }
    // Index of the first fix with timestamp >= t.
    let idx = reference.partition_point(|r| r.t < t);
    if idx == 0 {
        return Some(first.position);
    }
    let hi = &reference[idx.min(reference.len() - 1)];
    if hi.t == t {
        return Some(hi.position);
    }
    let lo = &reference[idx - 1];
    let fraction = (t - lo.t) / (hi.t - lo.t);
    Some(lo.position.lerp(&hi.position, fraction))
}

/// Error statistics of one pair set in one zone (or overall).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneScore<T> {
    /// Root-mean-square error in metres over the zone's aligned samples.
    pub rmse: T,
    /// Number of aligned samples attributed to the zone.
    pub samples: usize,
}

/// Full score sheet of one candidate set over a drive.
#[derive(Debug, Clone, PartialEq)]
pub struct SetEvaluation<T> {
    /// Per-zone scores, keyed by zone id (zones without samples are absent).
    pub per_zone: BTreeMap<ZoneId, ZoneScore<T>>,
    /// Score over every aligned sample, in or out of zones.
    pub overall: ZoneScore<T>,
}

/// Scores one candidate set over the aligned drive.
///
/// Solves run sequentially with warm starts: the first from the set's anchor
/// centroid with auxiliary starts enabled, each subsequent one from the
/// previous estimate (re-enabling auxiliary starts right after a
/// non-converged solve). Each sample's error is `|estimate - reference|`
/// capped at `cfg.penalty_m`; non-converged solves are charged the full cap.
pub fn evaluate_set<T: Real>(
    set: &PairSet,
    samples: &[AlignedSample<T>],
    plan: &FloorPlan<T>,
    cfg: &CalibrationConfig<T>,
) -> Result<SetEvaluation<T>> {
    let zones: Vec<Option<ZoneId>> = samples
        .iter()
        .map(|s| plan.zone_of(s.reference))
        .collect();
    evaluate_set_with_zones(set, samples, &zones, plan, cfg)
}

fn evaluate_set_with_zones<T: Real>(
    set: &PairSet,
    samples: &[AlignedSample<T>],
    zones: &[Option<ZoneId>],
    plan: &FloorPlan<T>,
    cfg: &CalibrationConfig<T>,
) -> Result<SetEvaluation<T>> {
    let mut init = set_anchor_centroid(set, plan.anchors())?;
    let mut rescue = true; // first solve has no warm start

    let mut per_zone: BTreeMap<ZoneId, (T, usize)> = BTreeMap::new();
    let mut overall_sq = T::zero();

    for (sample, zone) in samples.iter().zip(zones) {
        let solver_cfg = cfg.solver.with_multi_start(cfg.solver.multi_start && rescue);
        let mut fix = solve(&sample.bundle, set, plan.anchors(), init, &solver_cfg)?;
        // Consecutive drive samples are a fraction of a metre apart, so a
        // warm-started fix that lands far from its init has hopped basins;
        // re-solve the same sample with auxiliary starts before scoring it,
        // lest one hop derail the rest of the chain.
        if cfg.solver.multi_start
            && !solver_cfg.multi_start
            && (!fix.converged || fix.position.distance(&init) > cfg.rescue_jump_m)
        {
            fix = solve(&sample.bundle, set, plan.anchors(), init, &cfg.solver)?;
        }
        let error = if fix.converged {
            fix.position.distance(&sample.reference).min(cfg.penalty_m)
        } else {
            cfg.penalty_m
        };
        init = fix.position;
        rescue = !fix.converged;

        overall_sq += error * error;
        if let Some(zone_id) = zone {
            let entry = per_zone.entry(*zone_id).or_insert((T::zero(), 0));
            entry.0 += error * error;
            entry.1 += 1;
        }
    }

    let score = |sum_sq: T, n: usize| ZoneScore {
        rmse: if n == 0 {
            T::zero()
        } else {
            (sum_sq / T::from_usize(n).unwrap()).sqrt()
        },
        samples: n,
    };
    Ok(SetEvaluation {
        per_zone: per_zone
            .into_iter()
            .map(|(zone, (sum_sq, n))| (zone, score(sum_sq, n)))
            .collect(),
        overall: score(overall_sq, samples.len()),
    })
}

/// The calibrated winner for one zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneEntry<T> {
    /// Winning pair set for the zone.
    pub set: PairSet,
    /// Its RMSE over the zone's aligned samples, in metres.
    pub rmse: T,
    /// Number of aligned samples in the zone.
    pub samples: usize,
}

/// The deployable outcome of calibration: which set to use where.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePlan<T> {
    /// Winning set per calibrated zone.
    pub zones: BTreeMap<ZoneId, ZoneEntry<T>>,
    /// Set used outside calibrated zones (lowest overall RMSE).
    pub default_set: PairSet,
    /// Overall RMSE of the default set, in metres.
    pub default_rmse: T,
    /// Zones of the floor plan left uncalibrated for lack of samples.
    pub uncalibrated: Vec<ZoneId>,
}

impl<T> ZonePlan<T> {
    /// The set to use at a given (possibly unknown) zone.
    pub fn set_for(&self, zone: Option<ZoneId>) -> &PairSet {
        zone.and_then(|id| self.zones.get(&id))
            .map(|entry| &entry.set)
            .unwrap_or(&self.default_set)
    }
}

/// Everything the calibration sweep produces, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome<T> {
    /// The deployable per-zone selection.
    pub plan: ZonePlan<T>,
    /// Every candidate set, in enumeration order.
    pub candidates: Vec<PairSet>,
    /// Score sheet per candidate, parallel to `candidates`.
    pub evaluations: Vec<SetEvaluation<T>>,
    /// Bundles dropped during alignment.
    pub dropped_bundles: usize,
}

/// Runs the full calibration sweep and winner selection.
pub fn calibrate<T: Real>(
    bundles: &[TdoaBundle<T>],
    reference: &[ReferenceFix<T>],
    plan: &FloorPlan<T>,
    rule: &EnumerationRule,
    cfg: &CalibrationConfig<T>,
) -> Result<CalibrationOutcome<T>> {
    let alignment = align_measurements(bundles, reference)?;
    if alignment.samples.is_empty() {
        return Err(Error::NoCalibrationData(
            "no bundle falls within the reference time span".into(),
        ));
    }

    let anchor_ids: Vec<_> = plan.anchors().iter().map(|a| a.id).collect();
    let candidates = enumerate_pair_sets(&anchor_ids, rule)?;
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }

    // Zone attribution depends only on the reference positions.
    let zones: Vec<Option<ZoneId>> = alignment
        .samples
        .iter()
        .map(|s| plan.zone_of(s.reference))
        .collect();

    let evaluations: Vec<SetEvaluation<T>> = candidates
        .par_iter()
        .map(|set| evaluate_set_with_zones(set, &alignment.samples, &zones, plan, cfg))
        .collect::<Result<_>>()?;

    // Per-zone winners.
    let mut zone_entries: BTreeMap<ZoneId, ZoneEntry<T>> = BTreeMap::new();
    let mut uncalibrated: Vec<ZoneId> = Vec::new();
    for zone in plan.zones() {
        let mut winner: Option<(&PairSet, ZoneScore<T>)> = None;
        for (set, eval) in candidates.iter().zip(&evaluations) {
            let Some(score) = eval.per_zone.get(&zone.id) else {
                continue;
            };
            if score.samples < cfg.min_zone_samples {
                continue;
            }
            let better = match &winner {
                None => true,
                Some((best_set, best)) => {
                    score.rmse < best.rmse
                        || (score.rmse == best.rmse
                            && (set.len() < best_set.len()
                                || (set.len() == best_set.len() && set < best_set)))
                }
            };
            if better {
                winner = Some((set, *score));
            }
        }
        match winner {
            Some((set, score)) => {
                zone_entries.insert(
                    zone.id,
                    ZoneEntry {
                        set: set.clone(),
                        rmse: score.rmse,
                        samples: score.samples,
                    },
                );
            }
            None => uncalibrated.push(zone.id),
        }
    }

    // Default set: lowest overall RMSE (ties: fewer pairs, lexicographic).
    let default_idx = (0..candidates.len())
        .min_by(|&a, &b| {
            evaluations[a]
                .overall
                .rmse
                .partial_cmp(&evaluations[b].overall.rmse)
                .expect("finite RMSE")
                .then_with(|| candidates[a].len().cmp(&candidates[b].len()))
                .then_with(|| candidates[a].cmp(&candidates[b]))
        })
        .expect("candidates verified non-empty");

    Ok(CalibrationOutcome {
        plan: ZonePlan {
            zones: zone_entries,
            default_set: candidates[default_idx].clone(),
            default_rmse: evaluations[default_idx].overall.rmse,
            uncalibrated,
        },
        candidates,
        evaluations,
        dropped_bundles: alignment.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{all_pairs, AnchorPair};
    use crate::plan::{Anchor, Zone};
    use crate::sim::{simulate_drive, NoiseModel, PathSpec};
    use crate::solver::predict_tdoa;
    use approx::assert_relative_eq;

    type P = Point2<f64>;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<P> {
        vec![
            P::new(x0, y0),
            P::new(x1, y0),
            P::new(x1, y1),
            P::new(x0, y1),
        ]
    }

    fn plan3() -> FloorPlan<f64> {
        FloorPlan::new(
            vec![
                Anchor {
                    id: 1,
                    position: P::new(0.0, 0.0),
                },
                Anchor {
                    id: 2,
                    position: P::new(10.0, 0.0),
                },
                Anchor {
                    id: 3,
                    position: P::new(5.0, 9.0),
                },
            ],
            vec![],
            vec![],
            vec![Zone {
                id: 1,
                boundary: square(2.0, 1.0, 8.0, 5.0),
            }],
        )
        .unwrap()
    }

    fn fix(t: f64, x: f64, y: f64) -> ReferenceFix<f64> {
        ReferenceFix {
            t,
            position: P::new(x, y),
        }
    }

    #[test]
    fn alignment_interpolates_between_fixes() {
        let reference = [fix(0.0, 0.0, 0.0), fix(1.0, 2.0, 4.0)];
        let bundles = vec![
            TdoaBundle::new(0.5f64),
            TdoaBundle::new(1.0),
            TdoaBundle::new(1.5), // beyond the last fix
        ];
        let alignment = align_measurements(&bundles, &reference).unwrap();
        assert_eq!(alignment.samples.len(), 2);
        assert_eq!(alignment.dropped, 1);
        assert_relative_eq!(alignment.samples[0].reference.x, 1.0);
        assert_relative_eq!(alignment.samples[0].reference.y, 2.0);
        assert_relative_eq!(alignment.samples[1].reference.x, 2.0);
    }

    #[test]
    fn alignment_rejects_bad_reference_tracks() {
        assert!(matches!(
            align_measurements::<f64>(&[], &[]),
            Err(Error::NoCalibrationData(_))
        ));
        let unordered = [fix(1.0, 0.0, 0.0), fix(1.0, 1.0, 1.0)];
        assert!(matches!(
            align_measurements(&[TdoaBundle::new(1.0f64)], &unordered),
            Err(Error::NoCalibrationData(_))
        ));
    }

    #[test]
    fn alignment_drops_early_and_late_bundles() {
        let reference = [fix(10.0, 0.0, 0.0), fix(11.0, 1.0, 0.0)];
        let bundles = vec![
            TdoaBundle::new(9.0f64),
            TdoaBundle::new(10.0),
            TdoaBundle::new(12.0),
        ];
        let alignment = align_measurements(&bundles, &reference).unwrap();
        assert_eq!(alignment.samples.len(), 1);
        assert_eq!(alignment.dropped, 2);
    }

    /// Two samples with exact bundles but references shifted by 3 m and 4 m:
    /// the set's zone RMSE must be sqrt((9 + 16) / 2).
    #[test]
    fn evaluate_set_averages_squared_errors() {
        let plan = plan3();
        let set = PairSet::from_ids(&[(1, 2), (1, 3), (2, 3)]).unwrap();
        let tag_a = P::new(5.0, 2.0);
        let tag_b = P::new(5.0, 3.0);
        let mut bundle_a = TdoaBundle::new(0.0);
        let mut bundle_b = TdoaBundle::new(1.0);
        for pair in &set {
            bundle_a.insert(*pair, predict_tdoa(tag_a, pair, plan.anchors()).unwrap());
            bundle_b.insert(*pair, predict_tdoa(tag_b, pair, plan.anchors()).unwrap());
        }
        let samples = vec![
            AlignedSample {
                bundle: bundle_a,
                reference: P::new(2.0, 2.0), // 3 m from the solved position
            },
            AlignedSample {
                bundle: bundle_b,
                reference: P::new(5.0, 7.0), // 4 m, and outside the zone
            },
        ];
        let eval = evaluate_set(&set, &samples, &plan, &CalibrationConfig::default()).unwrap();
        // First sample is in zone 1, second is not.
        assert_eq!(eval.per_zone[&1].samples, 1);
        assert_relative_eq!(eval.per_zone[&1].rmse, 3.0, epsilon = 1e-6);
        assert_eq!(eval.overall.samples, 2);
        assert_relative_eq!(eval.overall.rmse, 12.5f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn evaluate_set_caps_wild_errors() {
        let plan = plan3();
        let set = PairSet::from_ids(&[(1, 2), (1, 3), (2, 3)]).unwrap();
        let tag = P::new(5.0, 2.0);
        let mut bundle = TdoaBundle::new(0.0);
        for pair in &set {
            bundle.insert(*pair, predict_tdoa(tag, pair, plan.anchors()).unwrap());
        }
        let samples = vec![AlignedSample {
            bundle,
            reference: P::new(45.0, 2.0), // 40 m away
        }];
        let eval = evaluate_set(&set, &samples, &plan, &CalibrationConfig::default()).unwrap();
        assert_relative_eq!(eval.overall.rmse, 10.0);
    }

    #[test]
    fn calibration_winners_dominate_per_zone() {
        let plan = plan3();
        let pairs = all_pairs(&[1, 2, 3]);
        let path = PathSpec {
            waypoints: vec![P::new(2.5, 1.5), P::new(7.5, 1.5), P::new(7.5, 4.5)],
            speed_mps: 0.5,
            rate_hz: 5.0,
        };
        let noise = NoiseModel {
            toa_sigma_ns: 0.6,
            reference_sigma_m: 0.03,
            seed: 11,
        };
        let log = simulate_drive(&path, &plan, &pairs, &noise).unwrap();
        let rule = EnumerationRule {
            min_pairs: 2,
            max_pairs: 3,
            max_anchor_uses: 3,
        };
        let outcome = calibrate(
            &log.bundles,
            &log.reference,
            &plan,
            &rule,
            &CalibrationConfig::default(),
        )
        .unwrap();

        // 3 pairs -> 3 two-pair sets + 1 three-pair set.
        assert_eq!(outcome.candidates.len(), 4);
        assert!(outcome.plan.uncalibrated.is_empty());
        let entry = &outcome.plan.zones[&1];
        for eval in &outcome.evaluations {
            if let Some(score) = eval.per_zone.get(&1) {
                assert!(entry.rmse <= score.rmse + 1e-12);
            }
        }
        // The default set's overall RMSE is the minimum overall.
        for eval in &outcome.evaluations {
            assert!(outcome.plan.default_rmse <= eval.overall.rmse + 1e-12);
        }
        assert_eq!(outcome.dropped_bundles, 0);
    }

    #[test]
    fn sparse_zones_stay_uncalibrated() {
        let zones = vec![
            Zone {
                id: 1,
                boundary: square(2.0, 1.0, 8.0, 5.0),
            },
            // Never visited by the path below.
            Zone {
                id: 2,
                boundary: square(-3.0, -3.0, -1.0, -1.0),
            },
        ];
        let plan = FloorPlan::new(plan3().anchors().to_vec(), vec![], vec![], zones).unwrap();
        let pairs = all_pairs(&[1, 2, 3]);
        let path = PathSpec {
            waypoints: vec![P::new(2.5, 1.5), P::new(7.5, 1.5)],
            speed_mps: 0.5,
            rate_hz: 5.0,
        };
        let log =
            simulate_drive(&path, &plan, &pairs, &NoiseModel::default().with_seed(5)).unwrap();
        let rule = EnumerationRule {
            min_pairs: 2,
            max_pairs: 3,
            max_anchor_uses: 3,
        };
        let outcome = calibrate(
            &log.bundles,
            &log.reference,
            &plan,
            &rule,
            &CalibrationConfig::default(),
        )
        .unwrap();
        assert_eq!(outcome.plan.uncalibrated, vec![2]);
        assert!(outcome.plan.zones.contains_key(&1));
        assert!(!outcome.plan.zones.contains_key(&2));
        // set_for falls back to the default for unknown and uncalibrated zones.
        assert_eq!(outcome.plan.set_for(Some(2)), &outcome.plan.default_set);
        assert_eq!(outcome.plan.set_for(None), &outcome.plan.default_set);
        assert_eq!(outcome.plan.set_for(Some(1)), &outcome.plan.zones[&1].set);
    }

    #[test]
    fn no_pair_in_common_errors_cleanly() {
        // A candidate set referencing an anchor the bundles do not measure
        // surfaces as MissingPair from the solver.
        let plan = plan3();
        let set = PairSet::from_ids(&[(1, 2), (2, 3)]).unwrap();
        let mut bundle = TdoaBundle::new(0.0f64);
        bundle.insert(AnchorPair::new(1, 2).unwrap(), 0.1);
        let samples = vec![AlignedSample {
            bundle,
            reference: P::new(5.0, 2.0),
        }];
        let err = evaluate_set(&set, &samples, &plan, &CalibrationConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MissingPair { .. }));
    }
}
