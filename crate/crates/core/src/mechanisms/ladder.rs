use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::valuations::PriceVector;

/// Candidate prices `{0} ∪ {ψ/2^j}` and the number of halving rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePrices {
    /// Strictly increasing; `prices[0] == 0`; length `2^beta`.
    pub prices: Vec<f64>,
    pub beta: u32,
}

/// `⌈log₂ m⌉`, floored at 1 so a single item still gets a nontrivial ladder.
pub fn log2_ceil_items(m: usize) -> u32 {
    let m = m.max(2);
    usize::BITS - (m - 1).leading_zeros()
}

/// Builds the candidate set for scale `psi` over `m` items.
///
/// The listed set is `0` plus `ψ·2^-j` for `j = 1..=3⌈log₂ m⌉`. It is padded
/// at the bottom with further halvings until its size is a power of two.
pub fn candidate_prices(psi: f64, m: usize) -> Result<CandidatePrices> {
    if !(psi.is_finite() && psi > 0.0) {
        return Err(Error::input(format!(
            "psi must be positive and finite, got {psi}"
        )));
    }
    let listed = 3 * log2_ceil_items(m) as usize + 1;
    let size = listed.next_power_of_two();
    let mut prices = Vec::with_capacity(size);
    prices.push(0.0);
    for j in (1..size as i32).rev() {
        prices.push(psi * 2f64.powi(-j));
    }
    if prices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input(format!(
            "psi = {psi} is too small for distinct candidate prices"
        )));
    }
    Ok(CandidatePrices {
        beta: size.trailing_zeros(),
        prices,
    })
}

/// Per-item windows of remaining candidate prices.
///
/// Every window is a contiguous run of the sorted base set and all windows
/// share one width, which halves each round.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceLadder {
    base: Vec<f64>,
    lo: Vec<usize>,
    width: usize,
    round: u32,
}

pub type NarrowFn = fn(&mut PriceLadder, ItemSet);

impl PriceLadder {
    pub fn new(base: &CandidatePrices, m: usize) -> Self {
        PriceLadder {
            base: base.prices.clone(),
            lo: vec![0; m],
            width: base.prices.len(),
            round: 1,
        }
    }

    /// 1-based index of the round about to run.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_items(&self) -> usize {
        self.lo.len()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Remaining candidates for `item`, increasing.
    pub fn candidates(&self, item: usize) -> &[f64] {
        &self.base[self.lo[item]..self.lo[item] + self.width]
    }

    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        (0..self.num_items())
            .map(|e| self.candidates(e).to_vec())
            .collect()
    }

    /// This round's posted prices: the `(k/2 + 1)`-th of `k` candidates,
    /// which is the unique one once `k = 1`.
    pub fn prices(&self) -> PriceVector {
        let mid = self.width / 2;
        PriceVector::new(self.lo.iter().map(|&lo| self.base[lo + mid]).collect())
            .expect("candidate prices are non-negative")
    }

    /// Keeps the upper half for sold items and the lower half otherwise.
    pub fn narrow(&mut self, sold: ItemSet) {
        assert!(self.width >= 2, "ladder already resolved");
        let half = self.width / 2;
        for (e, lo) in self.lo.iter_mut().enumerate() {
            if sold.contains(e) {
                *lo += half;
            }
        }
        self.width = half;
        self.round += 1;
    }

    /// Deliberately wrong narrowing: halves swapped. Used to check that the
    /// direction invariant is actually enforced.
    #[cfg(test)]
    pub(crate) fn narrow_inverted(&mut self, sold: ItemSet) {
        self.narrow(ItemSet::full(self.num_items()).difference(sold));
    }
}
