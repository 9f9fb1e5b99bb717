use super::validate::{monotonicity_violation_in, subadditivity_violation_in};
use super::{Valuation, ValuationOracle, EXPLICIT_LIMIT};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;

/// Turns an arbitrary normalized table into a monotone, subadditive one.
///
/// Alternates a min pass, `v(S) <- min(v(S), v(A) + v(B))` over splits of `S`
/// into disjoint nonempty `A, B`, with a max pass,
/// `v(S) <- max(v(S), v(S \ {e}))`, until both properties hold. Subsets are
/// visited in increasing bitmask order, so every proper subset of `S` is
/// final before `S` and one sweep of each pass reaches its fixpoint.
pub fn subadditive_repair(mut table: Vec<f64>) -> Result<ValuationOracle> {
    let len = table.len();
    if !len.is_power_of_two() {
        return Err(Error::input(format!("table length {len} is not 2^m")));
    }
    let m = len.trailing_zeros() as usize;
    if m > EXPLICIT_LIMIT {
        return Err(Error::capability(format!(
            "repair supports at most {EXPLICIT_LIMIT} items, got {m}"
        )));
    }
    if let Some(k) = table.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::input(format!(
            "table[{k}] must be finite and non-negative"
        )));
    }
    if table[0] != 0.0 {
        return Err(Error::input("table entry for the empty set must be 0"));
    }

    let full = ItemSet::full(m);
    let cap = 1usize << m;
    for _ in 0..cap {
        min_pass(&mut table, full);
        let changed = max_pass(&mut table, full);
        if !changed {
            let value = |s: ItemSet| table[s.bits() as usize];
            let sound = monotonicity_violation_in(m, value).is_none()
                && (m > super::SUBADDITIVE_LIMIT || subadditivity_violation_in(m, value).is_none());
            if !sound {
                return Err(Error::Internal(
                    "repair reached a fixpoint that fails validation".into(),
                ));
            }
            return ValuationOracle::new(Valuation::Explicit {
                table,
                subadditive: true,
            });
        }
    }
    Err(Error::Internal(format!(
        "repair did not converge within {cap} passes"
    )))
}

fn min_pass(table: &mut [f64], full: ItemSet) {
    for s in full.subsets().skip(1) {
        let mut best = table[s.bits() as usize];
        for a in s.subsets() {
            let b = s.difference(a);
            // each unordered split once, both parts nonempty
            if a.is_empty() || b.is_empty() || a.bits() > b.bits() {
                continue;
            }
            let split = table[a.bits() as usize] + table[b.bits() as usize];
            if split < best {
                best = split;
            }
        }
        table[s.bits() as usize] = best;
    }
}

fn max_pass(table: &mut [f64], full: ItemSet) -> bool {
    let mut changed = false;
    for s in full.subsets().skip(1) {
        let floor = s
            .iter()
            .map(|e| table[s.without(e).bits() as usize])
            .fold(f64::NEG_INFINITY, f64::max);
        if floor > table[s.bits() as usize] {
            table[s.bits() as usize] = floor;
            changed = true;
        }
    }
    changed
}
