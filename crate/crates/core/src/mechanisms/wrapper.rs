//! Removes the need to know ψ: a random half of the bidders prices the
//! grand bundle, and a coin decides between selling it to them outright and
//! running the binary search on the other half with the learned scale.

use super::binary_search::{rounds_for, run_search, Subroutines};
use super::transcript::{
    FinalSource, MechanismKind, Outcome, SearchCoins, SecondPriceRecord, Settlement, Transcript,
    ValueReport, WrapperCoins,
};
use crate::auction::{Allocation, Bidders};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;

pub fn final_mechanism(bidders: &Bidders, items: ItemSet, seed: u64) -> Result<Outcome> {
    let n = bidders.len();
    let wrapper = WrapperCoins::draw(seed, n);
    let search = SearchCoins::draw(seed, n, rounds_for(bidders.num_items()));
    final_with_coins(
        bidders,
        items,
        &wrapper,
        &search,
        Some(seed),
        &Subroutines::default(),
    )
}

pub fn final_with_coins(
    bidders: &Bidders,
    items: ItemSet,
    wrapper: &WrapperCoins,
    search: &SearchCoins,
    seed: Option<u64>,
    subs: &Subroutines,
) -> Result<Outcome> {
    let n = bidders.len();
    let m = bidders.num_items();
    items.check_within(m)?;
    if wrapper.sample.len() != n {
        return Err(Error::input(format!(
            "sample covers {} bidders, instance has {n}",
            wrapper.sample.len()
        )));
    }
    search.check(n, rounds_for(m))?;

    let mut t = Transcript::new(MechanismKind::Final, seed, n, m, items);
    t.deviation = bidders.deviation();
    t.wrapper_coins = Some(wrapper.clone());
    t.search_coins = Some(search.clone());

    for i in (0..n).filter(|&i| wrapper.sample[i]) {
        let value = bidders.report_value(i, items)?;
        t.value_reports.push(ValueReport { bidder: i, value });
    }
    let queries = t.value_reports.len();

    // highest report wins, lowest index on ties
    let mut winner: Option<ValueReport> = None;
    for r in &t.value_reports {
        if winner.is_none_or(|w| r.value > w.value) {
            winner = Some(*r);
        }
    }

    if wrapper.second_price {
        let price = t
            .value_reports
            .iter()
            .filter(|r| Some(r.bidder) != winner.map(|w| w.bidder))
            .map(|r| r.value)
            .fold(0.0, f64::max);
        t.second_price = Some(SecondPriceRecord {
            winner: winner.map(|w| w.bidder),
            price,
        });
        t.settlement = match winner {
            None => Settlement::nothing(n, queries),
            Some(w) => {
                let mut allocation = Allocation::empty(n);
                allocation.assign(w.bidder, items);
                let value = bidders.true_value(w.bidder, items);
                let mut utilities = vec![0.0; n];
                let mut payments = vec![0.0; n];
                utilities[w.bidder] = value - price;
                payments[w.bidder] = price;
                Settlement {
                    allocation,
                    utilities,
                    payments,
                    revenue: price,
                    welfare: value,
                    queries,
                    source: FinalSource::SecondPrice,
                }
            }
        };
        return Ok(Outcome { transcript: t });
    }

    let psi = winner.map_or(0.0, |w| w.value);
    if psi <= 0.0 {
        t.psi = winner.map(|w| w.value);
        t.settlement = Settlement::nothing(n, queries);
        return Ok(Outcome { transcript: t });
    }
    let participants: Vec<usize> = (0..n).filter(|&i| !wrapper.sample[i]).collect();
    run_search(
        bidders,
        &participants,
        items,
        psi,
        search,
        subs,
        queries,
        &mut t,
    )?;
    Ok(Outcome { transcript: t })
}
