use super::transcript::{settle_fpa, FinalSource, MechanismKind, Outcome, RoundRecord, Transcript};
use crate::auction::Bidders;
use crate::error::Result;
use crate::itemset::ItemSet;
use crate::valuations::PriceVector;

/// One fixed-price auction over all bidders in index order. Payments are real.
pub fn fpa_fixed(bidders: &Bidders, items: ItemSet, prices: &PriceVector) -> Result<Outcome> {
    let n = bidders.len();
    let mut t = Transcript::new(MechanismKind::FpaFixed, None, n, bidders.num_items(), items);
    t.deviation = bidders.deviation();
    t.fixed_prices = Some(prices.clone());
    let order: Vec<usize> = (0..n).collect();
    let result = crate::auction::fixed_price_auction(bidders, &order, items, prices)?;
    let welfare = result.welfare(bidders);
    t.settlement = settle_fpa(&result, welfare, n, FinalSource::FixedPrice);
    t.rounds.push(RoundRecord {
        round: 1,
        participants: order,
        prices: prices.clone(),
        result,
        ladder_after: Vec::new(),
    });
    Ok(Outcome { transcript: t })
}
