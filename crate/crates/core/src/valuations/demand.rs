use serde::{Deserialize, Serialize};

use super::{Kind, Valuation};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;

/// Default cap on `|available|` for exhaustive demand queries.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 12;

/// Valuations over at most this many items are tabulated once on
/// construction so that exhaustive demand queries are table lookups.
const TABULATE_LIMIT: usize = 16;

/// Per-item non-negative prices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(#[serde(with = "crate::hexfloat::vec")] Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if let Some(k) = prices.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::input(format!(
                "price[{k}] = {} must be finite and non-negative",
                prices[k]
            )));
        }
        Ok(PriceVector(prices))
    }

    pub fn uniform(m: usize, price: f64) -> Result<Self> {
        PriceVector::new(vec![price; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, item: usize) -> f64 {
        self.0[item]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `p(S)`, summed in increasing item order.
    pub fn total(&self, s: ItemSet) -> f64 {
        s.iter().fold(0.0, |acc, e| acc + self.0[e])
    }
}

/// Answers value and demand queries for one valuation.
///
/// Immutable after construction; share freely across threads.
#[derive(Clone, Debug)]
pub struct ValuationOracle {
    valuation: Valuation,
    m: usize,
    table: Option<Vec<f64>>,
    exhaustive_limit: usize,
}

impl PartialEq for ValuationOracle {
    fn eq(&self, other: &Self) -> bool {
        self.valuation == other.valuation && self.exhaustive_limit == other.exhaustive_limit
    }
}

impl ValuationOracle {
    pub fn new(valuation: Valuation) -> Result<Self> {
        ValuationOracle::with_limit(valuation, DEFAULT_EXHAUSTIVE_LIMIT)
    }

    pub fn with_limit(valuation: Valuation, exhaustive_limit: usize) -> Result<Self> {
        let m = valuation.num_items();
        valuation.check(m)?;
        let table = match valuation.kind() {
            Kind::Additive | Kind::UnitDemand | Kind::Explicit => None,
            _ if m <= TABULATE_LIMIT => Some(
                ItemSet::full(m)
                    .subsets()
                    .map(|s| valuation.value(s))
                    .collect(),
            ),
            _ => None,
        };
        Ok(ValuationOracle {
            valuation,
            m,
            table,
            exhaustive_limit,
        })
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn kind(&self) -> Kind {
        self.valuation.kind()
    }

    pub fn num_items(&self) -> usize {
        self.m
    }

    pub fn exhaustive_limit(&self) -> usize {
        self.exhaustive_limit
    }

    /// `v(S)`.
    pub fn value_query(&self, s: ItemSet) -> Result<f64> {
        s.check_within(self.m)?;
        Ok(self.value_unchecked(s))
    }

    pub(crate) fn value_unchecked(&self, s: ItemSet) -> f64 {
        match &self.table {
            Some(t) => t[s.bits() as usize],
            None => self.valuation.value(s),
        }
    }

    /// A utility-maximizing bundle `S ⊆ available` under `prices`.
    ///
    /// Ties go to the smaller bundle, then to the smaller bitmask. Additive
    /// and unit-demand valuations answer in closed form; every other class
    /// enumerates the subsets of `available`.
    pub fn demand_query(&self, prices: &PriceVector, available: ItemSet) -> Result<ItemSet> {
        if prices.len() != self.m {
            return Err(Error::input(format!(
                "price vector has {} entries for {} items",
                prices.len(),
                self.m
            )));
        }
        available.check_within(self.m)?;
        Ok(match &self.valuation {
            Valuation::Additive { values } => available
                .iter()
                .filter(|&e| values[e] > prices.get(e))
                .collect(),
            Valuation::UnitDemand { values } => {
                let mut best = ItemSet::EMPTY;
                let mut best_utility = 0.0;
                for e in available.iter() {
                    let u = values[e] - prices.get(e);
                    if u > best_utility {
                        best = ItemSet::singleton(e);
                        best_utility = u;
                    }
                }
                best
            }
            _ => self.exhaustive_demand(prices, available)?,
        })
    }

    /// Demand by enumerating every subset of `available`, regardless of class.
    pub fn exhaustive_demand(&self, prices: &PriceVector, available: ItemSet) -> Result<ItemSet> {
        if available.len() > self.exhaustive_limit {
            return Err(Error::capability(format!(
                "exhaustive demand over {} items exceeds the limit of {}",
                available.len(),
                self.exhaustive_limit
            )));
        }
        let items: Vec<usize> = available.iter().collect();
        // price sums indexed by the rank of each subset in increasing order;
        // dropping the top bit of the rank drops the highest item, so the
        // fold order matches `PriceVector::total`.
        let mut price_sums = vec![0.0; 1 << items.len()];
        let mut best = ItemSet::EMPTY;
        let mut best_utility = self.value_unchecked(ItemSet::EMPTY);
        for (rank, s) in available.subsets().enumerate().skip(1) {
            let top = usize::BITS - 1 - rank.leading_zeros();
            price_sums[rank] = price_sums[rank ^ (1 << top)] + prices.get(items[top as usize]);
            let u = self.value_unchecked(s) - price_sums[rank];
            if u > best_utility || (u == best_utility && s.len() < best.len()) {
                best = s;
                best_utility = u;
            }
        }
        Ok(best)
    }

    /// `v(S) - p(S)`.
    pub fn utility(&self, prices: &PriceVector, s: ItemSet) -> f64 {
        self.value_unchecked(s) - prices.total(s)
    }
}
