use super::ladder::{candidate_prices, CandidatePrices, NarrowFn, PriceLadder};
use super::transcript::{
    settle_fpa, FinalSource, MechanismKind, Outcome, RoundRecord, SearchCoins, Settlement,
    Transcript,
};
use crate::auction::{fixed_price_auction, Bidders, FpaFn};
use crate::error::Result;
use crate::itemset::ItemSet;

/// The two subroutines the binary search is built from. The defaults are the
/// real ones; the invariant suite swaps in faulty variants to prove that its
/// checks bite.
#[derive(Clone, Copy, Debug)]
pub struct Subroutines {
    pub fpa: FpaFn,
    pub narrow: NarrowFn,
}

impl Default for Subroutines {
    fn default() -> Self {
        Subroutines {
            fpa: fixed_price_auction,
            narrow: PriceLadder::narrow,
        }
    }
}

/// Number of halving rounds for `m` items; independent of ψ.
pub fn rounds_for(m: usize) -> u32 {
    candidate_prices(1.0, m).expect("unit scale is valid").beta
}

/// Runs the binary-search mechanism on all bidders with scale `psi`,
/// drawing its coins from `seed`.
pub fn binary_search_mechanism(
    bidders: &Bidders,
    items: ItemSet,
    psi: f64,
    seed: u64,
) -> Result<Outcome> {
    let coins = SearchCoins::draw(seed, bidders.len(), rounds_for(bidders.num_items()));
    binary_search_with_coins(
        bidders,
        items,
        psi,
        &coins,
        Some(seed),
        &Subroutines::default(),
    )
}

/// Runs the binary-search mechanism with its randomness pinned.
pub fn binary_search_with_coins(
    bidders: &Bidders,
    items: ItemSet,
    psi: f64,
    coins: &SearchCoins,
    seed: Option<u64>,
    subs: &Subroutines,
) -> Result<Outcome> {
    let n = bidders.len();
    let m = bidders.num_items();
    items.check_within(m)?;
    let participants: Vec<usize> = (0..n).collect();
    let mut transcript = Transcript::new(MechanismKind::BinarySearch, seed, n, m, items);
    transcript.deviation = bidders.deviation();
    run_search(
        bidders,
        &participants,
        items,
        psi,
        coins,
        subs,
        0,
        &mut transcript,
    )?;
    Ok(Outcome { transcript })
}

/// Core of the mechanism over the ordered `participants`. Fills in the
/// search-related transcript fields and the settlement. `prior_queries`
/// counts queries already posed by an enclosing mechanism.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_search(
    bidders: &Bidders,
    participants: &[usize],
    items: ItemSet,
    psi: f64,
    coins: &SearchCoins,
    subs: &Subroutines,
    prior_queries: usize,
    transcript: &mut Transcript,
) -> Result<()> {
    let m = bidders.num_items();
    if psi == 0.0 {
        // nobody values the grand bundle; there is nothing to price
        coins.check(bidders.len(), rounds_for(m))?;
        transcript.psi = Some(psi);
        transcript.search_coins = Some(coins.clone());
        transcript.settlement = Settlement::nothing(bidders.len(), prior_queries);
        return Ok(());
    }
    let CandidatePrices { prices: base, beta } = candidate_prices(psi, m)?;
    coins.check(bidders.len(), beta)?;
    transcript.psi = Some(psi);
    transcript.search_coins = Some(coins.clone());
    transcript.candidate_prices = base.clone();

    let mut ladder = PriceLadder::new(&CandidatePrices { prices: base, beta }, m);
    let mut queries = prior_queries;
    for round in 1..=beta + 1 {
        let prices = ladder.prices();
        let order: Vec<usize> = participants
            .iter()
            .copied()
            .filter(|&i| coins.rounds[i] == round)
            .collect();
        let result = (subs.fpa)(bidders, &order, items, &prices)?;
        queries += order.len();
        let ladder_after = if round <= beta {
            (subs.narrow)(&mut ladder, result.sold);
            ladder.snapshot()
        } else {
            Vec::new()
        };
        let is_final = round == coins.final_round;
        if is_final {
            let welfare = result.welfare(bidders);
            transcript.settlement =
                settle_fpa(&result, welfare, queries, FinalSource::Round(round));
        }
        transcript.rounds.push(RoundRecord {
            round,
            participants: order,
            prices,
            result,
            ladder_after,
        });
        if is_final {
            break;
        }
    }
    Ok(())
}
