//! Exact optimal welfare at desk scale.

use serde::{Deserialize, Serialize};

use crate::auction::Allocation;
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::itemset::ItemSet;
use crate::valuations::{Instance, ValuationOracle};

/// Largest `m` accepted by [`brute_force_opt`].
pub const DP_ITEM_LIMIT: usize = 15;
/// Largest number of assignments `(n+1)^m` accepted by [`naive_opt`].
pub const NAIVE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    #[serde(with = "hexfloat")]
    pub welfare: f64,
    pub allocation: Allocation,
}

fn tables(oracles: &[ValuationOracle], m: usize) -> Vec<Vec<f64>> {
    oracles
        .iter()
        .map(|o| {
            (0..1u32 << m)
                .map(|s| o.value_unchecked(ItemSet::from_bits(s)))
                .collect()
        })
        .collect()
}

/// Subset DP over bidders. Ties keep the numerically smallest bundle for the
/// later bidder.
pub fn brute_force_opt(instance: &Instance) -> Result<OptResult> {
    let oracles = instance.oracles()?;
    opt_over(&oracles, instance.num_items())
}

pub fn opt_over(oracles: &[ValuationOracle], m: usize) -> Result<OptResult> {
    if m > DP_ITEM_LIMIT {
        return Err(Error::capability(format!(
            "optimal welfare needs m <= {DP_ITEM_LIMIT}, got {m}"
        )));
    }
    let n = oracles.len();
    let size = 1usize << m;
    let values = tables(oracles, m);
    let mut best = vec![0.0f64; size];
    let mut choice = vec![vec![0u32; size]; n];
    for (i, v) in values.iter().enumerate() {
        let mut next = vec![0.0f64; size];
        for s in 0..size as u32 {
            let mut top = f64::NEG_INFINITY;
            let mut arg = 0;
            let mut t = 0u32;
            loop {
                let cand = v[t as usize] + best[(s & !t) as usize];
                if cand > top {
                    top = cand;
                    arg = t;
                }
                if t == s {
                    break;
                }
                t = t.wrapping_sub(s) & s;
            }
            next[s as usize] = top;
            choice[i][s as usize] = arg;
        }
        best = next;
    }
    let mut allocation = Allocation::empty(n);
    let mut rest = size as u32 - 1;
    for i in (0..n).rev() {
        let t = choice[i][rest as usize];
        allocation.assign(i, ItemSet::from_bits(t));
        rest &= !t;
    }
    Ok(OptResult {
        welfare: best[size - 1],
        allocation,
    })
}

/// Enumerates every map item → bidder or unallocated.
pub fn naive_opt(instance: &Instance) -> Result<OptResult> {
    let n = instance.num_bidders();
    let m = instance.num_items();
    let count = (n as u64 + 1)
        .checked_pow(m as u32)
        .filter(|&c| c <= NAIVE_LIMIT);
    let Some(count) = count else {
        return Err(Error::capability(format!(
            "naive enumeration of {}^{m} assignments exceeds {NAIVE_LIMIT}",
            n + 1
        )));
    };
    let oracles = instance.oracles()?;
    let mut owner = vec![n; m];
    let mut best: Option<(f64, Vec<ItemSet>)> = None;
    for _ in 0..count {
        let mut bundles = vec![ItemSet::EMPTY; n];
        for (e, &o) in owner.iter().enumerate() {
            if o < n {
                bundles[o] = bundles[o].with(e);
            }
        }
        let welfare = bundles
            .iter()
            .enumerate()
            .fold(0.0, |acc, (i, &b)| acc + oracles[i].value_unchecked(b));
        if best.as_ref().is_none_or(|(w, _)| welfare > *w) {
            best = Some((welfare, bundles));
        }
        // odometer over owners, digit n meaning unallocated
        for o in owner.iter_mut() {
            if *o == n {
                *o = 0;
            } else {
                *o += 1;
            }
            if *o != n {
                break;
            }
        }
    }
    let (welfare, bundles) = best.expect("at least one assignment");
    Ok(OptResult {
        welfare,
        allocation: Allocation::from_bundles(bundles),
    })
}
