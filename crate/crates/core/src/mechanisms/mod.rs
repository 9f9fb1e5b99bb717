mod binary_search;
mod fixed;
mod ladder;
mod replay;
mod transcript;
mod wrapper;

pub use binary_search::{
    binary_search_mechanism, binary_search_with_coins, rounds_for, Subroutines,
};
pub use fixed::fpa_fixed;
pub use ladder::{candidate_prices, log2_ceil_items, CandidatePrices, NarrowFn, PriceLadder};
pub use replay::replay;
pub use transcript::{
    FinalSource, MechanismKind, Outcome, RoundRecord, SearchCoins, SecondPriceRecord, Settlement,
    Transcript, ValueReport, WrapperCoins, TRANSCRIPT_FORMAT,
};
pub use wrapper::{final_mechanism, final_with_coins};
