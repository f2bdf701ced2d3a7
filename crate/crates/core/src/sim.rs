//! Synthetic measurement generation over a floor plan.
//!
//! The simulator produces what a real deployment would log: per-epoch TDOA
//! bundles from the UWB infrastructure and a noisy ground-reference track
//! from a surveying robot. Signal propagation is line-of-sight distance plus
//! *excess delay*: each wall segment properly crossed adds its per-wall delay
//! and each obstacle whose interior the path traverses adds its delay once
//! per traversal, regardless of how many edges the path cuts. Times of
//! arrival then receive white Gaussian noise, and reference positions receive
//! independent white Gaussian noise per coordinate.
//!
//! All randomness flows through a caller-seeded ChaCha generator in a fixed
//! draw order (anchors by ascending id, then reference x, then reference y),
//! so a given seed reproduces a byte-identical log.

use rand::Rng;
use rand::SeedableRng;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{segment_crosses_polygon_interior, segments_properly_cross, Point2};
use crate::measure::{toa_to_tdoa, AnchorPair, ReferenceFix, TdoaBundle};
use crate::plan::{AnchorId, FloorPlan};
use crate::real::Real;

/// Deterministic generator used by all simulation entry points.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Noise parameters of the synthetic measurement chain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseModel<T> {
    /// Standard deviation of time-of-arrival noise, in nanoseconds.
    pub toa_sigma_ns: T,
    /// Standard deviation of reference-position noise per axis, in metres.
    pub reference_sigma_m: T,
    /// Seed for the deterministic random generator.
    pub seed: u64,
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        Self {
            toa_sigma_ns: T::lit(0.6),
            reference_sigma_m: T::lit(0.03),
            seed: 0,
        }
    }
}

impl<T: Real> NoiseModel<T> {
    /// The same noise model with a different seed.
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// A noise-free model (useful for oracle tests).
    pub fn noiseless(seed: u64) -> Self {
        Self {
            toa_sigma_ns: T::zero(),
            reference_sigma_m: T::zero(),
            seed,
        }
    }

    /// Creates the seeded generator for this model.
    pub fn rng(&self) -> SimRng {
        SimRng::seed_from_u64(self.seed)
    }
}

/// A constant-speed trajectory specification along a waypoint polyline.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathSpec<T> {
    /// Waypoints of the polyline, in metres.
    pub waypoints: Vec<Point2<T>>,
    /// Travel speed along the polyline, in metres per second.
    pub speed_mps: T,
    /// Sampling rate, in samples per second.
    pub rate_hz: T,
}

impl<T: Real> PathSpec<T> {
    /// Total polyline length in metres.
    pub fn length(&self) -> T {
        self.waypoints
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .fold(T::zero(), |acc, d| acc + d)
    }
}

/// Samples a [`PathSpec`] into timestamped true positions.
///
/// Sample `k` is taken at `t = k / rate_hz` at arc length `speed * t` along
/// the polyline. If the final waypoint does not fall exactly on the sampling
/// grid it is appended as one extra sample at the exact arrival time, so the
/// trajectory always ends at the last waypoint.
pub fn sample_path<T: Real>(spec: &PathSpec<T>) -> Result<Vec<(T, Point2<T>)>> {
    if spec.waypoints.len() < 2 {
        return Err(Error::InvalidPath(format!(
            "need at least 2 waypoints, got {}",
            spec.waypoints.len()
        )));
    }
    if spec.waypoints.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidPath("non-finite waypoint".into()));
    }
    if !spec.speed_mps.is_finite() || spec.speed_mps <= T::zero() {
        return Err(Error::InvalidPath("speed must be positive".into()));
    }
    if !spec.rate_hz.is_finite() || spec.rate_hz <= T::zero() {
        return Err(Error::InvalidPath("sampling rate must be positive".into()));
    }
    let total_len = spec.length();
    if total_len <= T::lit(crate::geometry::BOUNDARY_TOL) {
        return Err(Error::InvalidPath("polyline has zero length".into()));
    }

    let total_time = total_len / spec.speed_mps;
    let dt = T::one() / spec.rate_hz;
    // Tolerate accumulated rounding of about one part in 1e9 of a step.
    let eps = dt * T::lit(1e-9);

    let mut samples = Vec::new();
    let mut k = 0usize;
    loop {
        let t = T::from_usize(k).unwrap() * dt;
        if t > total_time + eps {
            break;
        }
        let s = (spec.speed_mps * t).min(total_len);
        samples.push((t, point_at_arc_length(&spec.waypoints, s)));
        k += 1;
    }
    let last_t = samples.last().expect("k = 0 always sampled").0;
    if total_time - last_t > eps {
        samples.push((total_time, *spec.waypoints.last().unwrap()));
    }
    Ok(samples)
}

/// Point at arc length `s` along the waypoint polyline (clamped to its ends).
fn point_at_arc_length<T: Real>(waypoints: &[Point2<T>], s: T) -> Point2<T> {
    let mut remaining = s.max(T::zero());
    for w in waypoints.windows(2) {
        let seg_len = w[0].distance(&w[1]);
        if remaining <= seg_len {
            if seg_len <= T::lit(crate::geometry::BOUNDARY_TOL) {
                return w[1];
            }
            return w[0].lerp(&w[1], remaining / seg_len);
        }
        remaining -= seg_len;
    }
    *waypoints.last().expect("validated non-empty")
}

/// Excess propagation delay between `tx` and `rx`, in nanoseconds.
///
/// Sums the delays of every wall the segment properly crosses and of every
/// obstacle whose interior it traverses (each obstacle charged at most once).
pub fn excess_delay<T: Real>(tx: Point2<T>, rx: Point2<T>, plan: &FloorPlan<T>) -> T {
    let mut total = T::zero();
    for wall in plan.walls() {
        if segments_properly_cross(tx, rx, wall.start, wall.end) {
            total += wall.delay_ns;
        }
    }
    for obstacle in plan.obstacles() {
        if segment_crosses_polygon_interior(tx, rx, &obstacle.boundary) {
            total += obstacle.delay_ns;
        }
    }
    total
}

/// Simulates one epoch of per-anchor times of arrival for a tag at `tag`.
///
/// Each anchor's TOA is `distance / c + excess_delay + N(0, toa_sigma)`,
/// in nanoseconds. Anchors are processed in ascending id order so the RNG
/// draw sequence is deterministic.
pub fn simulate_toa<T: Real, R: Rng + ?Sized>(
    tag: Point2<T>,
    plan: &FloorPlan<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> BTreeMap<AnchorId, T> {
    let c = T::speed_of_light_m_per_ns();
    let mut toa = BTreeMap::new();
    for anchor in plan.anchors() {
        let geometric_ns = tag.distance(&anchor.position) / c;
        let excess_ns = excess_delay(tag, anchor.position, plan);
        let noise_ns = T::standard_normal(rng) * noise.toa_sigma_ns;
        toa.insert(anchor.id, geometric_ns + excess_ns + noise_ns);
    }
    toa
}

/// Simulates one TDOA bundle for a tag position, converting the noisy TOAs
/// of [`simulate_toa`] into range differences for the requested pairs.
pub fn simulate_bundle<T: Real, R: Rng + ?Sized>(
    t: T,
    tag: Point2<T>,
    plan: &FloorPlan<T>,
    pairs: &[AnchorPair],
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> Result<TdoaBundle<T>> {
    let toa = simulate_toa(tag, plan, noise, rng);
    toa_to_tdoa(t, &toa, pairs)
}

/// Everything one simulated drive produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveLog<T> {
    /// One TDOA bundle per path sample.
    pub bundles: Vec<TdoaBundle<T>>,
    /// Noisy ground-reference fixes, one per path sample.
    pub reference: Vec<ReferenceFix<T>>,
    /// Noise-free true positions, one per path sample.
    pub truth: Vec<ReferenceFix<T>>,
}

/// Simulates a full drive: the tag moves along `path` while every pair in
/// `pairs` is measured at each sample and a noisy reference fix is recorded.
///
/// Draw order per sample: anchor TOAs by ascending id, then reference x,
/// then reference y. The generator is seeded from `noise.seed`.
pub fn simulate_drive<T: Real>(
    path: &PathSpec<T>,
    plan: &FloorPlan<T>,
    pairs: &[AnchorPair],
    noise: &NoiseModel<T>,
) -> Result<DriveLog<T>> {
    let samples = sample_path(path)?;
    let mut rng = noise.rng();
    let mut bundles = Vec::with_capacity(samples.len());
    let mut reference = Vec::with_capacity(samples.len());
    let mut truth = Vec::with_capacity(samples.len());
    for (t, position) in samples {
        bundles.push(simulate_bundle(t, position, plan, pairs, noise, &mut rng)?);
        let nx = T::standard_normal(&mut rng) * noise.reference_sigma_m;
        let ny = T::standard_normal(&mut rng) * noise.reference_sigma_m;
        reference.push(ReferenceFix {
            t,
            position: Point2::new(position.x + nx, position.y + ny),
        });
        truth.push(ReferenceFix { t, position });
    }
    Ok(DriveLog {
        bundles,
        reference,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::all_pairs;
    use crate::plan::{Anchor, Obstacle, Wall};
    use approx::assert_relative_eq;

    type P = Point2<f64>;

    fn plan_with(walls: Vec<Wall<f64>>, obstacles: Vec<Obstacle<f64>>) -> FloorPlan<f64> {
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
                    position: P::new(0.0, 10.0),
                },
            ],
            walls,
            obstacles,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn path_sampling_matches_uniform_motion() {
        let spec = PathSpec {
            waypoints: vec![P::new(0.0, 0.0), P::new(10.0, 0.0)],
            speed_mps: 1.0,
            rate_hz: 1.0,
        };
        let samples = sample_path(&spec).unwrap();
        assert_eq!(samples.len(), 11);
        for (k, (t, p)) in samples.iter().enumerate() {
            assert_relative_eq!(*t, k as f64);
            assert_relative_eq!(p.x, k as f64, epsilon = 1e-12);
            assert_relative_eq!(p.y, 0.0);
        }
    }

    #[test]
    fn path_sampling_appends_exact_final_waypoint() {
        let spec = PathSpec {
            waypoints: vec![P::new(0.0, 0.0), P::new(1.5, 0.0)],
            speed_mps: 1.0,
            rate_hz: 1.0,
        };
        let samples = sample_path(&spec).unwrap();
        assert_eq!(samples.len(), 3);
        assert_relative_eq!(samples[2].0, 1.5);
        assert_relative_eq!(samples[2].1.x, 1.5);
    }

    #[test]
    fn path_sampling_follows_corners() {
        let spec = PathSpec {
            waypoints: vec![P::new(0.0, 0.0), P::new(2.0, 0.0), P::new(2.0, 2.0)],
            speed_mps: 2.0,
            rate_hz: 1.0,
        };
        let samples = sample_path(&spec).unwrap();
        // Length 4 m at 2 m/s -> 2 s; samples at t = 0, 1, 2.
        assert_eq!(samples.len(), 3);
        assert_relative_eq!(samples[1].1.x, 2.0);
        assert_relative_eq!(samples[1].1.y, 0.0);
        assert_relative_eq!(samples[2].1.y, 2.0);
    }

    #[test]
    fn degenerate_paths_are_rejected() {
        let base = PathSpec {
            waypoints: vec![P::new(0.0, 0.0), P::new(1.0, 0.0)],
            speed_mps: 1.0,
            rate_hz: 1.0,
        };
        assert!(sample_path(&PathSpec {
            waypoints: vec![P::new(0.0, 0.0)],
            ..base.clone()
        })
        .is_err());
        assert!(sample_path(&PathSpec {
            speed_mps: 0.0,
            ..base.clone()
        })
        .is_err());
        assert!(sample_path(&PathSpec {
            rate_hz: -1.0,
            ..base.clone()
        })
        .is_err());
        assert!(sample_path(&PathSpec {
            waypoints: vec![P::new(0.0, 0.0), P::new(0.0, 0.0)],
            ..base
        })
        .is_err());
    }

    #[test]
    fn line_of_sight_has_zero_excess() {
        let plan = plan_with(vec![], vec![]);
        assert_eq!(excess_delay(P::new(1.0, 1.0), P::new(5.0, 1.0), &plan), 0.0);
    }

    #[test]
    fn wall_crossing_adds_its_delay_once() {
        let plan = plan_with(
            vec![Wall {
                start: P::new(2.0, -1.0),
                end: P::new(2.0, 1.0),
                delay_ns: 0.2,
            }],
            vec![],
        );
        assert_relative_eq!(
            excess_delay(P::new(0.0, 0.0), P::new(4.0, 0.0), &plan),
            0.2
        );
        // Path parallel to the wall: no crossing.
        assert_relative_eq!(
            excess_delay(P::new(0.0, 2.0), P::new(4.0, 2.0), &plan),
            0.0
        );
    }

    #[test]
    fn obstacle_traversal_charges_once_per_obstacle() {
        let square = vec![
            P::new(4.0, -1.0),
            P::new(6.0, -1.0),
            P::new(6.0, 1.0),
            P::new(4.0, 1.0),
        ];
        let plan = plan_with(
            vec![],
            vec![Obstacle {
                boundary: square,
                delay_ns: 4.0,
            }],
        );
        // Crosses two edges but is charged once.
        assert_relative_eq!(
            excess_delay(P::new(0.0, 0.0), P::new(10.0, 0.0), &plan),
            4.0
        );
        // Slides along the top edge: no traversal.
        assert_relative_eq!(
            excess_delay(P::new(0.0, 1.0), P::new(10.0, 1.0), &plan),
            0.0
        );
    }

    #[test]
    fn excess_delay_is_symmetric() {
        let plan = plan_with(
            vec![Wall {
                start: P::new(2.0, -5.0),
                end: P::new(2.0, 5.0),
                delay_ns: 0.2,
            }],
            vec![Obstacle {
                boundary: vec![
                    P::new(4.0, -1.0),
                    P::new(6.0, -1.0),
                    P::new(6.0, 1.0),
                    P::new(4.0, 1.0),
                ],
                delay_ns: 2.0,
            }],
        );
        let a = P::new(-1.0, 0.3);
        let b = P::new(9.0, -0.2);
        assert_relative_eq!(excess_delay(a, b, &plan), excess_delay(b, a, &plan));
        assert_relative_eq!(excess_delay(a, b, &plan), 2.2);
    }

    #[test]
    fn noiseless_drive_reproduces_geometry_exactly() {
        let plan = plan_with(vec![], vec![]);
        let pairs = all_pairs(&[1, 2, 3]);
        let path = PathSpec {
            waypoints: vec![P::new(2.0, 1.0), P::new(6.0, 1.0)],
            speed_mps: 1.0,
            rate_hz: 1.0,
        };
        let log = simulate_drive(&path, &plan, &pairs, &NoiseModel::noiseless(1)).unwrap();
        assert_eq!(log.bundles.len(), 5);
        for (bundle, truth) in log.bundles.iter().zip(&log.truth) {
            for (pair, &value) in bundle.iter() {
                let a = crate::plan::anchor_position(plan.anchors(), pair.first()).unwrap();
                let b = crate::plan::anchor_position(plan.anchors(), pair.second()).unwrap();
                let expected = truth.position.distance(&a) - truth.position.distance(&b);
                assert_relative_eq!(value, expected, epsilon = 1e-12);
            }
        }
        for (r, t) in log.reference.iter().zip(&log.truth) {
            assert_eq!(r.position, t.position);
        }
    }

    #[test]
    fn drives_are_reproducible_per_seed() {
        let plan = plan_with(vec![], vec![]);
        let pairs = all_pairs(&[1, 2, 3]);
        let path = PathSpec {
            waypoints: vec![P::new(2.0, 1.0), P::new(6.0, 1.0)],
            speed_mps: 1.0,
            rate_hz: 4.0,
        };
        let noise = NoiseModel {
            toa_sigma_ns: 0.6,
            reference_sigma_m: 0.03,
            seed: 42,
        };
        let a = simulate_drive(&path, &plan, &pairs, &noise).unwrap();
        let b = simulate_drive(&path, &plan, &pairs, &noise).unwrap();
        assert_eq!(a, b);
        let c = simulate_drive(&path, &plan, &pairs, &noise.with_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tdoa_values_are_antisymmetric_in_anchor_order() {
        // Swapping the anchor ids of a pair flips the sign of the range
        // difference; canonicalisation makes this an invariant of the data
        // rather than a runtime case.
        let plan = plan_with(vec![], vec![]);
        let noise = NoiseModel::noiseless(7);
        let mut rng = noise.rng();
        let toa = simulate_toa(P::new(3.0, 2.0), &plan, &noise, &mut rng);
        let c = f64::speed_of_light_m_per_ns();
        let d12 = (toa[&1] - toa[&2]) * c;
        let d21 = (toa[&2] - toa[&1]) * c;
        assert_relative_eq!(d12, -d21);
    }
}
