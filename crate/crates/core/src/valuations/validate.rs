use super::ValuationOracle;
use crate::error::{Error, Result};
use crate::itemset::ItemSet;

/// Slack allowed on every validator comparison.
pub const TOLERANCE: f64 = 1e-9;
/// Subadditivity checks all `4^m` pairs; this caps `m`.
pub const SUBADDITIVE_LIMIT: usize = 7;
/// Monotonicity checks `m * 2^m` item removals; this caps `m`.
pub const MONOTONE_LIMIT: usize = 16;

fn check_limit(what: &str, m: usize, limit: usize) -> Result<()> {
    if m > limit {
        Err(Error::capability(format!(
            "{what} check enumerates subsets and supports at most {limit} items, got {m}"
        )))
    } else {
        Ok(())
    }
}

/// First `(S, e)` with `v(S \ {e}) > v(S)`, scanning `S` in increasing order.
pub fn find_monotonicity_violation(v: &ValuationOracle) -> Result<Option<(ItemSet, usize)>> {
    let m = v.num_items();
    check_limit("monotonicity", m, MONOTONE_LIMIT)?;
    Ok(monotonicity_violation_in(m, |s| v.value_unchecked(s)))
}

pub(crate) fn monotonicity_violation_in(
    m: usize,
    value: impl Fn(ItemSet) -> f64,
) -> Option<(ItemSet, usize)> {
    for s in ItemSet::full(m).subsets() {
        let vs = value(s);
        for e in s.iter() {
            if value(s.without(e)) > vs + TOLERANCE {
                return Some((s, e));
            }
        }
    }
    None
}

pub fn is_monotone(v: &ValuationOracle) -> Result<bool> {
    Ok(find_monotonicity_violation(v)?.is_none())
}

/// First pair `(S, T)` with `v(S ∪ T) > v(S) + v(T)`.
pub fn find_subadditivity_violation(v: &ValuationOracle) -> Result<Option<(ItemSet, ItemSet)>> {
    let m = v.num_items();
    check_limit("subadditivity", m, SUBADDITIVE_LIMIT)?;
    Ok(subadditivity_violation_in(m, |s| v.value_unchecked(s)))
}

pub(crate) fn subadditivity_violation_in(
    m: usize,
    value: impl Fn(ItemSet) -> f64,
) -> Option<(ItemSet, ItemSet)> {
    let full = ItemSet::full(m);
    let values: Vec<f64> = full.subsets().map(&value).collect();
    for s in full.subsets() {
        for t in full.subsets() {
            let joint = values[s.union(t).bits() as usize];
            if joint > values[s.bits() as usize] + values[t.bits() as usize] + TOLERANCE {
                return Some((s, t));
            }
        }
    }
    None
}

pub fn is_subadditive(v: &ValuationOracle) -> Result<bool> {
    Ok(find_subadditivity_violation(v)?.is_none())
}
