//! Measurement domain types: anchor pairs, pair sets and TDOA bundles.
//!
//! A TDOA system measures, for an ordered pair of anchors `(first, second)`,
//! the range difference `|tag - first| - |tag - second|` in metres (time
//! differences are converted with the speed of light at the edge). Pairs are
//! kept canonical (`first < second`) so that a pair has exactly one
//! representation, and pair sets are kept sorted and duplicate-free.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::plan::{AnchorId, ZoneId};
use crate::real::Real;

/// Canonical (ordered) pair of distinct anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnchorPair {
    first: AnchorId,
    second: AnchorId,
}

impl AnchorPair {
    /// Builds the canonical pair for two distinct anchors, swapping the order
    /// when needed so that `first < second`.
    pub fn new(a: AnchorId, b: AnchorId) -> Result<Self> {
        if a == b {
            return Err(Error::DegeneratePair(a));
        }
        Ok(if a < b {
            Self {
                first: a,
                second: b,
            }
        } else {
            Self {
                first: b,
                second: a,
            }
        })
    }

    /// The lower anchor id.
    pub fn first(&self) -> AnchorId {
        self.first
    }

    /// The higher anchor id.
    pub fn second(&self) -> AnchorId {
        self.second
    }

    /// True when the pair uses the given anchor.
    pub fn contains(&self, id: AnchorId) -> bool {
        self.first == id || self.second == id
    }
}

impl std::fmt::Display for AnchorPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.first, self.second)
    }
}

/// A sorted, duplicate-free set of at least two anchor pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairSet {
    pairs: Vec<AnchorPair>,
}

impl PairSet {
    /// Canonicalises (sorts, deduplicates) the given pairs into a set.
    ///
    /// Errors with [`Error::PairSetTooSmall`] when fewer than two distinct
    /// pairs remain: a 2-D position needs at least two independent range
    /// differences.
    pub fn new(mut pairs: Vec<AnchorPair>) -> Result<Self> {
        pairs.sort();
        pairs.dedup();
        if pairs.len() < 2 {
            return Err(Error::PairSetTooSmall(pairs.len()));
        }
        Ok(Self { pairs })
    }

    /// Convenience constructor from raw id tuples.
    pub fn from_ids(ids: &[(AnchorId, AnchorId)]) -> Result<Self> {
        let pairs = ids
            .iter()
            .map(|&(a, b)| AnchorPair::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    /// The pairs, sorted ascending.
    pub fn pairs(&self) -> &[AnchorPair] {
        &self.pairs
    }

    /// Number of pairs in the set.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Always false: a set holds at least two pairs.
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Iterates over the pairs in ascending order.
    pub fn iter(&self) -> std::slice::Iter<'_, AnchorPair> {
        self.pairs.iter()
    }

    /// True when the set contains the pair.
    pub fn contains(&self, pair: &AnchorPair) -> bool {
        self.pairs.binary_search(pair).is_ok()
    }

    /// How many pairs of the set use each anchor, keyed by anchor id.
    pub fn anchor_usage(&self) -> BTreeMap<AnchorId, usize> {
        let mut usage = BTreeMap::new();
        for pair in &self.pairs {
            *usage.entry(pair.first()).or_insert(0) += 1;
            *usage.entry(pair.second()).or_insert(0) += 1;
        }
        usage
    }
}

impl std::fmt::Display for PairSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, pair) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{pair}")?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a PairSet {
    type Item = &'a AnchorPair;
    type IntoIter = std::slice::Iter<'a, AnchorPair>;
    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

/// All range-difference measurements observed at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TdoaBundle<T> {
    /// Epoch timestamp in seconds.
    pub t: T,
    values: BTreeMap<AnchorPair, T>,
}

impl<T: Real> TdoaBundle<T> {
    /// Creates an empty bundle for a given epoch.
    pub fn new(t: T) -> Self {
        Self {
            t,
            values: BTreeMap::new(),
        }
    }

    /// Inserts or replaces the value for a pair, in metres.
    pub fn insert(&mut self, pair: AnchorPair, value_m: T) {
        self.values.insert(pair, value_m);
    }

    /// The value for a pair, in metres.
    pub fn get(&self, pair: &AnchorPair) -> Option<T> {
        self.values.get(pair).copied()
    }

    /// True when every pair of `set` has a value in this bundle.
    pub fn contains_all(&self, set: &PairSet) -> bool {
        set.iter().all(|p| self.values.contains_key(p))
    }

    /// Number of pair values in the bundle.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the bundle holds no values.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates over `(pair, value)` entries in ascending pair order.
    pub fn iter(&self) -> impl Iterator<Item = (&AnchorPair, &T)> {
        self.values.iter()
    }
}

/// A ground-reference position fix (e.g. from a surveying robot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFix<T> {
    /// Timestamp in seconds.
    pub t: T,
    /// Reference position in metres.
    pub position: crate::geometry::Point2<T>,
}

/// One row of an evaluated trajectory: the tracker output at an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedFix<T> {
    /// Epoch timestamp in seconds.
    pub t: T,
    /// Final (filtered) position estimate in metres.
    pub position: crate::geometry::Point2<T>,
    /// Zone the tracker considered itself in, when any.
    pub zone: Option<ZoneId>,
    /// Pair set used for the measurement update at this epoch.
    pub set_used: PairSet,
    /// Rough least-squares position that drove zone detection, when one was
    /// solvable at this epoch.
    pub rough: Option<crate::geometry::Point2<T>>,
}

/// Converts per-anchor times of arrival into a bundle of range differences.
///
/// `toa_ns` maps anchor id to a time of arrival in nanoseconds; for each
/// requested pair the bundle receives
/// `(toa[first] - toa[second]) * c` in metres. Errors with
/// [`Error::MissingAnchor`] naming the offending pair when an anchor id has
/// no time of arrival.
pub fn toa_to_tdoa<T: Real>(
    t: T,
    toa_ns: &BTreeMap<AnchorId, T>,
    pairs: &[AnchorPair],
) -> Result<TdoaBundle<T>> {
    let c = T::speed_of_light_m_per_ns();
    let mut bundle = TdoaBundle::new(t);
    for pair in pairs {
        let lookup = |id: AnchorId| {
            toa_ns.get(&id).copied().ok_or(Error::MissingAnchor {
                first: pair.first(),
                second: pair.second(),
                missing: id,
            })
        };
        let first = lookup(pair.first())?;
        let second = lookup(pair.second())?;
        bundle.insert(*pair, (first - second) * c);
    }
    Ok(bundle)
}

/// All canonical pairs over the given anchor ids, in ascending order.
pub fn all_pairs(anchor_ids: &[AnchorId]) -> Vec<AnchorPair> {
    let mut ids: Vec<AnchorId> = anchor_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut pairs = Vec::with_capacity(ids.len() * (ids.len().saturating_sub(1)) / 2);
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            pairs.push(AnchorPair::new(ids[i], ids[j]).expect("distinct ids"));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairs_are_canonicalised() {
        let p = AnchorPair::new(4, 2).unwrap();
        assert_eq!((p.first(), p.second()), (2, 4));
        assert_eq!(p, AnchorPair::new(2, 4).unwrap());
        assert!(AnchorPair::new(3, 3).is_err());
        assert_eq!(p.to_string(), "2-4");
    }

    #[test]
    fn pair_sets_sort_and_deduplicate() {
        let set = PairSet::new(vec![
            AnchorPair::new(3, 1).unwrap(),
            AnchorPair::new(1, 2).unwrap(),
            AnchorPair::new(2, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(
            set.pairs(),
            &[AnchorPair::new(1, 2).unwrap(), AnchorPair::new(1, 3).unwrap()]
        );
        assert_eq!(set.to_string(), "1-2 1-3");
        // A single distinct pair is not enough.
        assert!(PairSet::new(vec![
            AnchorPair::new(1, 2).unwrap(),
            AnchorPair::new(2, 1).unwrap()
        ])
        .is_err());
    }

    #[test]
    fn anchor_usage_counts_both_endpoints() {
        let set = PairSet::from_ids(&[(1, 2), (1, 3), (2, 3)]).unwrap();
        let usage = set.anchor_usage();
        assert_eq!(usage[&1], 2);
        assert_eq!(usage[&2], 2);
        assert_eq!(usage[&3], 2);
    }

    #[test]
    fn toa_conversion_scales_by_speed_of_light() {
        let mut toa = BTreeMap::new();
        toa.insert(1u16, 10.0f64);
        toa.insert(2u16, 0.0f64);
        let pair = AnchorPair::new(1, 2).unwrap();
        let bundle = toa_to_tdoa(0.0, &toa, &[pair]).unwrap();
        assert_relative_eq!(bundle.get(&pair).unwrap(), 2.997_924_58);
    }

    #[test]
    fn toa_conversion_reports_missing_anchor() {
        let mut toa = BTreeMap::new();
        toa.insert(1u16, 10.0f64);
        let pair = AnchorPair::new(1, 2).unwrap();
        let err = toa_to_tdoa(0.0, &toa, &[pair]).unwrap_err();
        assert_eq!(
            err,
            Error::MissingAnchor {
                first: 1,
                second: 2,
                missing: 2
            }
        );
    }

    #[test]
    fn bundle_membership_checks_whole_set() {
        let mut bundle = TdoaBundle::new(0.0f64);
        bundle.insert(AnchorPair::new(1, 2).unwrap(), 0.5);
        bundle.insert(AnchorPair::new(1, 3).unwrap(), -0.25);
        let have = PairSet::from_ids(&[(1, 2), (1, 3)]).unwrap();
        let missing = PairSet::from_ids(&[(1, 2), (2, 3)]).unwrap();
        assert!(bundle.contains_all(&have));
        assert!(!bundle.contains_all(&missing));
    }

    #[test]
    fn all_pairs_enumerates_upper_triangle() {
        let pairs = all_pairs(&[3, 1, 2]);
        assert_eq!(
            pairs,
            vec![
                AnchorPair::new(1, 2).unwrap(),
                AnchorPair::new(1, 3).unwrap(),
                AnchorPair::new(2, 3).unwrap(),
            ]
        );
        assert_eq!(all_pairs(&(1..=6).collect::<Vec<_>>()).len(), 15);
    }
}
