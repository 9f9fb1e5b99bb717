//! The fixed-price auction: bidders arrive in order and each takes a demand
//! bundle from the items still unsold at posted prices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::valuations::{PriceVector, ValuationOracle};

/// One bundle per bidder, indexed by position in the instance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<ItemSet>);

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Allocation(vec![ItemSet::EMPTY; n])
    }

    pub fn from_bundles(bundles: Vec<ItemSet>) -> Self {
        Allocation(bundles)
    }

    pub fn num_bidders(&self) -> usize {
        self.0.len()
    }

    pub fn bundle(&self, bidder: usize) -> ItemSet {
        self.0[bidder]
    }

    pub fn bundles(&self) -> &[ItemSet] {
        &self.0
    }

    pub(crate) fn assign(&mut self, bidder: usize, bundle: ItemSet) {
        self.0[bidder] = bundle;
    }

    /// Union of all bundles.
    pub fn allocated(&self) -> ItemSet {
        self.0.iter().fold(ItemSet::EMPTY, |acc, s| acc.union(*s))
    }

    /// Bundles pairwise disjoint and contained in `items`.
    pub fn is_feasible(&self, items: ItemSet) -> bool {
        let mut seen = ItemSet::EMPTY;
        for s in &self.0 {
            if !s.is_disjoint(seen) || !s.is_subset_of(items) {
                return false;
            }
            seen = seen.union(*s);
        }
        true
    }
}

/// What a bidder answers to its single query when not answering truthfully.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Response {
    /// Demand-query answer. Items outside the offered set are ignored.
    Bundle(ItemSet),
    /// Value-query answer.
    Value(#[serde(with = "crate::hexfloat")] f64),
}

/// Replace one bidder's answer with a fixed response.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub bidder: usize,
    pub response: Response,
}

/// The bidder population as the mechanism sees it: true valuations over
/// `m` items, plus at most one bidder whose answers are overridden.
#[derive(Clone, Copy, Debug)]
pub struct Bidders<'a> {
    oracles: &'a [ValuationOracle],
    m: usize,
    deviation: Option<Deviation>,
}

impl<'a> Bidders<'a> {
    pub fn new(oracles: &'a [ValuationOracle], m: usize) -> Result<Self> {
        if let Some(i) = oracles.iter().position(|o| o.num_items() != m) {
            return Err(Error::input(format!(
                "bidder {i} is defined over {} items, expected {m}",
                oracles[i].num_items()
            )));
        }
        Ok(Bidders {
            oracles,
            m,
            deviation: None,
        })
    }

    /// The same population with `deviation` applied.
    pub fn deviating(self, deviation: Deviation) -> Self {
        Bidders {
            deviation: Some(deviation),
            ..self
        }
    }

    pub fn num_items(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.oracles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oracles.is_empty()
    }

    pub fn oracles(&self) -> &'a [ValuationOracle] {
        self.oracles
    }

    pub fn deviation(&self) -> Option<Deviation> {
        self.deviation
    }

    fn override_for(&self, bidder: usize) -> Option<Response> {
        self.deviation
            .filter(|d| d.bidder == bidder)
            .map(|d| d.response)
    }

    /// Bidder's answer to a demand query.
    pub fn demand(
        &self,
        bidder: usize,
        prices: &PriceVector,
        available: ItemSet,
    ) -> Result<ItemSet> {
        match self.override_for(bidder) {
            Some(Response::Bundle(b)) => Ok(b.intersection(available)),
            _ => self.oracles[bidder].demand_query(prices, available),
        }
    }

    /// Bidder's answer to a value query.
    pub fn report_value(&self, bidder: usize, bundle: ItemSet) -> Result<f64> {
        match self.override_for(bidder) {
            Some(Response::Value(x)) if x.is_finite() && x >= 0.0 => Ok(x),
            Some(Response::Value(x)) => Err(Error::input(format!("reported value {x} is invalid"))),
            _ => self.oracles[bidder].value_query(bundle),
        }
    }

    /// The bidder's true value, for welfare and utility accounting.
    pub fn true_value(&self, bidder: usize, bundle: ItemSet) -> f64 {
        self.oracles[bidder].value_unchecked(bundle)
    }
}

/// A demand query as posed: who was asked and which items were on offer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub bidder: usize,
    pub available: ItemSet,
}

/// Outcome of one fixed-price auction. Payments are what the winners would
/// pay; whether they are collected is up to the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpaResult {
    pub allocation: Allocation,
    #[serde(with = "crate::hexfloat::vec")]
    pub utilities: Vec<f64>,
    #[serde(with = "crate::hexfloat::vec")]
    pub payments: Vec<f64>,
    #[serde(with = "crate::hexfloat::vec")]
    pub revenue_by_item: Vec<f64>,
    pub sold: ItemSet,
    pub queries: Vec<DemandRecord>,
}

impl FpaResult {
    pub fn revenue(&self) -> f64 {
        self.revenue_by_item.iter().sum()
    }

    pub fn total_utility(&self) -> f64 {
        self.utilities.iter().sum()
    }

    /// `sum_i v_i(A_i)` under true valuations.
    pub fn welfare(&self, bidders: &Bidders) -> f64 {
        self.allocation
            .bundles()
            .iter()
            .enumerate()
            .map(|(i, s)| bidders.true_value(i, *s))
            .sum()
    }

    /// Revenue collected from the items in `s`.
    pub fn rev_of_set(&self, s: ItemSet) -> f64 {
        s.iter()
            .filter(|&e| e < self.revenue_by_item.len())
            .map(|e| self.revenue_by_item[e])
            .sum()
    }
}

/// Signature shared by [`fixed_price_auction`] and any stand-in used to
/// exercise the invariant checks.
pub type FpaFn = fn(&Bidders, &[usize], ItemSet, &PriceVector) -> Result<FpaResult>;

/// Runs the auction over `order` (bidder indices, visited in sequence) on
/// `items` at `prices`. One demand query per listed bidder.
pub fn fixed_price_auction(
    bidders: &Bidders,
    order: &[usize],
    items: ItemSet,
    prices: &PriceVector,
) -> Result<FpaResult> {
    fpa_impl(bidders, order, items, prices, true)
}

/// [`fixed_price_auction`] with the standard order `0..n` over all items.
pub fn run_fixed_price(oracles: &[ValuationOracle], prices: &PriceVector) -> Result<FpaResult> {
    let order: Vec<usize> = (0..oracles.len()).collect();
    let bidders = Bidders::new(oracles, prices.len())?;
    fixed_price_auction(&bidders, &order, ItemSet::full(prices.len()), prices)
}

pub(crate) fn fpa_impl(
    bidders: &Bidders,
    order: &[usize],
    items: ItemSet,
    prices: &PriceVector,
    shrink_remaining: bool,
) -> Result<FpaResult> {
    let n = bidders.len();
    let m = bidders.num_items();
    if prices.len() != m {
        return Err(Error::input(format!(
            "{} prices for {m} items",
            prices.len()
        )));
    }
    items.check_within(m)?;
    if let Some(&bad) = order.iter().find(|&&i| i >= n) {
        return Err(Error::input(format!("bidder {bad} is not in the instance")));
    }
    let mut allocation = Allocation::empty(n);
    let mut utilities = vec![0.0; n];
    let mut payments = vec![0.0; n];
    let mut revenue_by_item = vec![0.0; m];
    let mut queries = Vec::with_capacity(order.len());
    let mut remaining = items;
    for &i in order {
        queries.push(DemandRecord {
            bidder: i,
            available: remaining,
        });
        let bundle = bidders.demand(i, prices, remaining)?;
        allocation.assign(i, bundle);
        let paid = prices.total(bundle);
        payments[i] = paid;
        utilities[i] = bidders.true_value(i, bundle) - paid;
        for e in bundle.iter() {
            revenue_by_item[e] = prices.get(e);
        }
        if shrink_remaining {
            remaining = remaining.difference(bundle);
        }
    }
    Ok(FpaResult {
        sold: allocation.allocated(),
        allocation,
        utilities,
        payments,
        revenue_by_item,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::Valuation;

    fn additive(rows: &[&[f64]]) -> Vec<ValuationOracle> {
        rows.iter()
            .map(|r| ValuationOracle::new(Valuation::Additive { values: r.to_vec() }).unwrap())
            .collect()
    }

    fn prices(p: &[f64]) -> PriceVector {
        PriceVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn no_bidders_sells_nothing() {
        let r = run_fixed_price(&[], &prices(&[1.0, 1.0])).unwrap();
        assert_eq!(r.sold, ItemSet::EMPTY);
        assert_eq!(r.revenue(), 0.0);
        assert!(r.queries.is_empty());
    }

    #[test]
    fn single_bidder_buys_profitable_items() {
        let o = additive(&[&[3.0, 1.0]]);
        let r = run_fixed_price(&o, &prices(&[2.0, 2.0])).unwrap();
        assert_eq!(r.allocation.bundle(0), ItemSet::singleton(0));
        assert_eq!(r.payments, vec![2.0]);
        assert_eq!(r.utilities, vec![1.0]);
        assert_eq!(r.welfare(&Bidders::new(&o, o[0].num_items()).unwrap()), 3.0);
        assert_eq!(r.rev_of_set(ItemSet::EMPTY), 0.0);
        assert_eq!(r.rev_of_set(ItemSet::singleton(0)), 2.0);
        assert_eq!(r.rev_of_set(ItemSet::singleton(1)), 0.0);
    }

    #[test]
    fn earlier_bidders_take_first() {
        let o = additive(&[&[3.0, 3.0], &[5.0, 5.0]]);
        let r = run_fixed_price(&o, &prices(&[1.0, 1.0])).unwrap();
        assert_eq!(r.allocation.bundle(0), ItemSet::full(2));
        assert_eq!(r.allocation.bundle(1), ItemSet::EMPTY);
        assert_eq!(r.queries[1].available, ItemSet::EMPTY);
    }

    #[test]
    fn order_and_item_subset_are_respected() {
        let o = additive(&[&[3.0, 3.0], &[5.0, 5.0]]);
        let b = Bidders::new(&o, o[0].num_items()).unwrap();
        let r =
            fixed_price_auction(&b, &[1, 0], ItemSet::singleton(1), &prices(&[1.0, 1.0])).unwrap();
        assert_eq!(r.allocation.bundle(1), ItemSet::singleton(1));
        assert_eq!(r.allocation.bundle(0), ItemSet::EMPTY);
        assert!(fixed_price_auction(&b, &[2], ItemSet::EMPTY, &prices(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn welfare_splits_into_utility_plus_revenue() {
        let o = additive(&[&[3.0, 1.0, 4.0], &[1.0, 5.0, 9.0]]);
        let r = run_fixed_price(&o, &prices(&[0.5, 2.0, 6.0])).unwrap();
        let welfare = r.welfare(&Bidders::new(&o, o[0].num_items()).unwrap());
        assert_eq!(welfare, r.total_utility() + r.revenue());
        assert_eq!(r.payments.iter().sum::<f64>(), r.revenue());
        assert!(r.allocation.is_feasible(ItemSet::full(3)));
    }

    #[test]
    fn deviant_bundle_is_clipped_to_available_items() {
        let o = additive(&[&[3.0, 3.0], &[5.0, 5.0]]);
        let dev = Deviation {
            bidder: 1,
            response: Response::Bundle(ItemSet::full(2)),
        };
        let b = Bidders::new(&o, 2).unwrap().deviating(dev);
        let r = fixed_price_auction(&b, &[0, 1], ItemSet::full(2), &prices(&[4.0, 1.0])).unwrap();
        assert_eq!(r.allocation.bundle(0), ItemSet::singleton(1));
        assert_eq!(r.allocation.bundle(1), ItemSet::singleton(0));
        assert_eq!(r.utilities[1], 1.0);
    }

    #[test]
    fn skipping_the_remaining_update_breaks_feasibility() {
        let o = additive(&[&[3.0, 3.0], &[5.0, 5.0]]);
        let r = fpa_impl(
            &Bidders::new(&o, o[0].num_items()).unwrap(),
            &[0, 1],
            ItemSet::full(2),
            &prices(&[1.0, 1.0]),
            false,
        )
        .unwrap();
        assert!(!r.allocation.is_feasible(ItemSet::full(2)));
    }
}
