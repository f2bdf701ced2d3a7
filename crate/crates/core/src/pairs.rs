//! Candidate pair-set enumeration under selection constraints.
//!
//! The selection stage scores every *admissible* set of anchor pairs. A set
//! is admissible under an [`EnumerationRule`] when its size lies within
//! `[min_pairs, max_pairs]` and no single anchor appears in more than
//! `max_anchor_uses` of its pairs. With six anchors and the default rule
//! (sizes 3 to 5, each anchor used at most three times) this yields exactly
//! 4487 candidate sets.
//!
//! Enumeration is a depth-first walk over the sorted list of canonical pairs,
//! so the output order is deterministic: ascending lexicographic order of the
//! pair sequences, with shorter prefixes first.

use crate::error::{Error, Result};
use crate::measure::{all_pairs, AnchorPair, PairSet};
use crate::plan::AnchorId;

/// Constraints defining which pair sets are candidates for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EnumerationRule {
    /// Minimum number of pairs in a candidate set.
    pub min_pairs: usize,
    /// Maximum number of pairs in a candidate set.
    pub max_pairs: usize,
    /// Maximum number of pairs of one set any single anchor may appear in.
    pub max_anchor_uses: usize,
}

impl Default for EnumerationRule {
    fn default() -> Self {
        Self {
            min_pairs: 3,
            max_pairs: 5,
            max_anchor_uses: 3,
        }
    }
}

impl EnumerationRule {
    /// Checks the rule for internal consistency.
    pub fn validate(&self) -> Result<()> {
        if self.min_pairs < 2 {
            return Err(Error::InvalidRule(format!(
                "min_pairs must be at least 2, got {}",
                self.min_pairs
            )));
        }
        if self.max_pairs < self.min_pairs {
            return Err(Error::InvalidRule(format!(
                "max_pairs ({}) must be >= min_pairs ({})",
                self.max_pairs, self.min_pairs
            )));
        }
        if self.max_anchor_uses == 0 {
            return Err(Error::InvalidRule(
                "max_anchor_uses must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// True when `set` satisfies this rule.
    pub fn admits(&self, set: &PairSet) -> bool {
        set.len() >= self.min_pairs
            && set.len() <= self.max_pairs
            && set
                .anchor_usage()
                .values()
                .all(|&uses| uses <= self.max_anchor_uses)
    }
}

/// Enumerates every admissible pair set over the given anchors.
///
/// The result is sorted ascending by pair sequence (shorter prefixes first)
/// and contains no duplicates. Anchor ids are deduplicated before pairing.
pub fn enumerate_pair_sets(
    anchor_ids: &[AnchorId],
    rule: &EnumerationRule,
) -> Result<Vec<PairSet>> {
    rule.validate()?;
    let pairs = all_pairs(anchor_ids);

    // Map anchor ids to dense indices for O(1) usage bookkeeping.
    let mut ids: Vec<AnchorId> = anchor_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let index_of = |id: AnchorId| ids.binary_search(&id).expect("id from the same list");
    let endpoint_indices: Vec<(usize, usize)> = pairs
        .iter()
        .map(|p| (index_of(p.first()), index_of(p.second())))
        .collect();

    let mut out = Vec::new();
    let mut stack: Vec<AnchorPair> = Vec::with_capacity(rule.max_pairs);
    let mut usage = vec![0usize; ids.len()];
    walk(
        &pairs,
        &endpoint_indices,
        rule,
        0,
        &mut stack,
        &mut usage,
        &mut out,
    );
    Ok(out)
}

fn walk(
    pairs: &[AnchorPair],
    endpoints: &[(usize, usize)],
    rule: &EnumerationRule,
    from: usize,
    stack: &mut Vec<AnchorPair>,
    usage: &mut [usize],
    out: &mut Vec<PairSet>,
) {
    if stack.len() >= rule.min_pairs {
        out.push(PairSet::new(stack.clone()).expect("stack holds >= 2 sorted distinct pairs"));
    }
    if stack.len() == rule.max_pairs {
        return;
    }
    for next in from..pairs.len() {
        let (a, b) = endpoints[next];
        if usage[a] == rule.max_anchor_uses || usage[b] == rule.max_anchor_uses {
            continue;
        }
        usage[a] += 1;
        usage[b] += 1;
        stack.push(pairs[next]);
        walk(pairs, endpoints, rule, next + 1, stack, usage, out);
        stack.pop();
        usage[a] -= 1;
        usage[b] -= 1;
    }
}
