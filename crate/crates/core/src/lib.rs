//! Truthful posted-price combinatorial auctions for subadditive bidders:
//! valuation oracles, the fixed-price auction, the binary-search price
//! learner, the sampling wrapper, exact optimal welfare and a test harness.

pub mod auction;
pub mod error;
pub mod harness;
pub mod hexfloat;
pub mod itemset;
pub mod mechanisms;
pub mod oracle;
pub mod rng;
pub mod valuations;

pub use error::{Error, Result};
pub use itemset::ItemSet;
