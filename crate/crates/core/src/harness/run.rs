use serde::{Deserialize, Serialize};

use crate::auction::Bidders;
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::itemset::ItemSet;
use crate::mechanisms::{
    binary_search_with_coins, final_with_coins, fpa_fixed, rounds_for, MechanismKind, Outcome,
    SearchCoins, Subroutines, WrapperCoins,
};
use crate::valuations::PriceVector;

/// Where the binary search gets its scale ψ from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiPolicy {
    /// `max_i v_i(M)` from true values.
    Exact,
    /// Learned by the sampling wrapper.
    Wrapper,
    Fixed(#[serde(with = "hexfloat")] f64),
}

/// A mechanism plus whatever it needs beyond the instance and the seed.
#[derive(Clone, Debug)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    pub psi: PsiPolicy,
    pub fixed_prices: Option<PriceVector>,
    pub subroutines: Subroutines,
}

impl MechanismConfig {
    pub fn new(kind: MechanismKind) -> Self {
        MechanismConfig {
            kind,
            psi: match kind {
                MechanismKind::Final => PsiPolicy::Wrapper,
                _ => PsiPolicy::Exact,
            },
            fixed_prices: None,
            subroutines: Subroutines::default(),
        }
    }

    pub fn with_psi(mut self, psi: PsiPolicy) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_prices(mut self, prices: PriceVector) -> Self {
        self.fixed_prices = Some(prices);
        self
    }

    pub fn with_subroutines(mut self, subs: Subroutines) -> Self {
        self.subroutines = subs;
        self
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match (self.kind, self.psi) {
            (MechanismKind::Final, PsiPolicy::Wrapper) => Ok(()),
            (MechanismKind::Final, _) => Err(Error::input(
                "the final mechanism learns psi itself; use psi \"wrapper\"",
            )),
            (MechanismKind::BinarySearch, PsiPolicy::Wrapper) => Err(Error::input(
                "binary-search needs psi \"exact\" or a fixed value",
            )),
            (MechanismKind::BinarySearch, PsiPolicy::Fixed(x)) if !(x.is_finite() && x >= 0.0) => {
                Err(Error::input(format!(
                    "fixed psi must be finite and non-negative, got {x}"
                )))
            }
            (MechanismKind::FpaFixed, _) => match &self.fixed_prices {
                Some(p) if p.len() != m => Err(Error::input(format!(
                    "{} fixed prices for {m} items",
                    p.len()
                ))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// One seeded execution over all items.
    pub fn run(&self, bidders: &Bidders, seed: u64) -> Result<Outcome> {
        let m = bidders.num_items();
        self.validate(m)?;
        let items = ItemSet::full(m);
        let n = bidders.len();
        match self.kind {
            MechanismKind::FpaFixed => {
                let zeros;
                let prices = match &self.fixed_prices {
                    Some(p) => p,
                    None => {
                        zeros = PriceVector::uniform(m, 0.0)?;
                        &zeros
                    }
                };
                fpa_fixed(bidders, items, prices)
            }
            MechanismKind::BinarySearch => {
                let psi = match self.psi {
                    PsiPolicy::Fixed(x) => x,
                    _ => (0..n)
                        .map(|i| bidders.true_value(i, items))
                        .fold(0.0, f64::max),
                };
                let coins = SearchCoins::draw(seed, n, rounds_for(m));
                binary_search_with_coins(bidders, items, psi, &coins, Some(seed), &self.subroutines)
            }
            MechanismKind::Final => {
                let wrapper = WrapperCoins::draw(seed, n);
                let search = SearchCoins::draw(seed, n, rounds_for(m));
                final_with_coins(
                    bidders,
                    items,
                    &wrapper,
                    &search,
                    Some(seed),
                    &self.subroutines,
                )
            }
        }
    }
}
