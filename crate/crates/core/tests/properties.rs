//! Randomised invariant checks over the measurement and geometry primitives.

use proptest::prelude::*;
use std::collections::BTreeMap;

use tdoa_zones::geometry::{point_to_polyline_distance, Point2};
use tdoa_zones::measure::{all_pairs, toa_to_tdoa, AnchorPair, PairSet};
use tdoa_zones::pairs::{enumerate_pair_sets, EnumerationRule};

fn anchor_id() -> impl Strategy<Value = u16> {
    1u16..=40
}

proptest! {
    /// Pair construction canonicalises order: both orders name the same pair.
    #[test]
    fn pair_order_is_canonical(a in anchor_id(), b in anchor_id()) {
        prop_assume!(a != b);
        let p = AnchorPair::new(a, b).unwrap();
        let q = AnchorPair::new(b, a).unwrap();
        prop_assert_eq!(p, q);
        prop_assert!(p.first() < p.second());
    }

    /// Set construction sorts and deduplicates; rebuilding from its own pairs
    /// is the identity.
    #[test]
    fn pair_set_construction_is_idempotent(
        ids in proptest::collection::vec((anchor_id(), anchor_id()), 2..10)
    ) {
        let pairs: Vec<AnchorPair> = ids
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| AnchorPair::new(a, b).unwrap())
            .collect();
        prop_assume!(pairs.len() >= 2);
        let Ok(set) = PairSet::new(pairs) else {
            // Deduplication can drop below two pairs; nothing left to check.
            return Ok(());
        };
        let rebuilt = PairSet::new(set.iter().copied().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(&rebuilt, &set);
        let sorted_unique = set
            .iter()
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] < w[1]);
        prop_assert!(sorted_unique);
    }

    /// A common clock offset added to every time of arrival cancels in every
    /// TDOA exactly.
    #[test]
    fn tdoa_cancels_common_offset(
        toas in proptest::collection::btree_map(anchor_id(), -100.0f64..100.0, 3..8),
        offset in -1.0e6f64..1.0e6,
    ) {
        let ids: Vec<u16> = toas.keys().copied().collect();
        let pairs = all_pairs(&ids);
        let shifted: BTreeMap<u16, f64> =
            toas.iter().map(|(&id, &v)| (id, v + offset)).collect();
        let base = toa_to_tdoa(0.0, &toas, &pairs).unwrap();
        let moved = toa_to_tdoa(0.0, &shifted, &pairs).unwrap();
        for (pair, value) in base.iter() {
            let other = moved.get(pair).unwrap();
            prop_assert!(
                (value - other).abs() <= 1e-6 * value.abs().max(1.0),
                "pair {pair}: {value} vs {other}"
            );
        }
    }

    /// Enumerated sets obey the rule they were enumerated under, without
    /// duplicates, in ascending order.
    #[test]
    fn enumeration_respects_rule(
        n_anchors in 2usize..6,
        min in 2usize..4,
        extra in 0usize..2,
        uses in 2usize..4,
    ) {
        let ids: Vec<u16> = (1..=n_anchors as u16).collect();
        let rule = EnumerationRule {
            min_pairs: min,
            max_pairs: min + extra,
            max_anchor_uses: uses,
        };
        let sets = enumerate_pair_sets(&ids, &rule).unwrap();
        for w in sets.windows(2) {
            prop_assert!(w[0] < w[1], "sets out of order or duplicated");
        }
        for set in &sets {
            prop_assert!(rule.admits(set));
        }
    }

    /// Distance to a polyline never exceeds the distance to its nearest
    /// vertex, and is non-negative.
    #[test]
    fn polyline_distance_bounded_by_vertices(
        px in -20.0f64..20.0,
        py in -20.0f64..20.0,
        vertices in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..8),
    ) {
        let p = Point2::new(px, py);
        let path: Vec<Point2<f64>> =
            vertices.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let d = point_to_polyline_distance(p, &path).unwrap();
        let nearest_vertex = path
            .iter()
            .map(|v| p.distance(v))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(d >= 0.0);
        prop_assert!(d <= nearest_vertex + 1e-12);
    }

    /// Densifying a polyline by splitting segments at midpoints does not
    /// change distances to it.
    #[test]
    fn polyline_distance_invariant_to_densification(
        px in -20.0f64..20.0,
        py in -20.0f64..20.0,
        vertices in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..6),
    ) {
        let p = Point2::new(px, py);
        let path: Vec<Point2<f64>> =
            vertices.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let mut dense = Vec::new();
        for w in path.windows(2) {
            dense.push(w[0]);
            dense.push(Point2::new(
                (w[0].x + w[1].x) * 0.5,
                (w[0].y + w[1].y) * 0.5,
            ));
        }
        dense.push(*path.last().unwrap());
        let d0 = point_to_polyline_distance(p, &path).unwrap();
        let d1 = point_to_polyline_distance(p, &dense).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
    }
}
