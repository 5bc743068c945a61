//! Brute-force reference enumeration of concepts and covers.
//!
//! Nothing here shares code with the incremental builder: every subset of M
//! is closed directly through the derivation operators, and covers are the
//! transitive reduction of extent inclusion found by exhaustive search.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use crate::context::FormalContext;
use crate::error::{Error, Result};
use crate::lattice::Concept;

/// Largest attribute count accepted by [`enumerate_concepts`].
pub const MAX_ATTRIBUTES: usize = 24;

/// Every formal concept of `ctx`, sorted by (intent size, intent).
pub fn enumerate_concepts(ctx: &FormalContext) -> Result<Vec<Concept>> {
    let m = ctx.attribute_count();
    if m > MAX_ATTRIBUTES {
        return Err(Error::ContextTooLarge { attributes: m, limit: MAX_ATTRIBUTES });
    }
    let mut intents = BTreeSet::new();
    for mask in 0u32..(1u32 << m) {
        let mut subset = FixedBitSet::with_capacity(m);
        for bit in 0..m {
            if mask & (1 << bit) != 0 {
                subset.insert(bit);
            }
        }
        let closed = ctx.close_intent(&subset);
        intents.insert((closed.count_ones(..), closed.ones().collect::<Vec<_>>()));
    }
    Ok(intents
        .into_iter()
        .map(|(_, ones)| {
            let mut intent = FixedBitSet::with_capacity(m);
            intent.extend(ones);
            Concept::new(ctx.extent_of(&intent), intent)
        })
        .collect())
}

/// Cover pairs (child, parent) over `concepts`, by exhaustive search for
/// strictly intermediate extents.
pub fn covers(concepts: &[Concept]) -> Vec<(usize, usize)> {
    let below = |a: &Concept, b: &Concept| a.extent() != b.extent() && a.extent().is_subset(b.extent());
    let mut out = Vec::new();
    for (i, child) in concepts.iter().enumerate() {
        for (j, parent) in concepts.iter().enumerate() {
            if !below(child, parent) {
                continue;
            }
            let between = concepts.iter().any(|mid| below(child, mid) && below(mid, parent));
            if !between {
                out.push((i, j));
            }
        }
    }
    out.sort();
    out
}
