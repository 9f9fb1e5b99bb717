use std::fmt;

use serde::{Deserialize, Serialize};

use crate::auction::{Allocation, Deviation, FpaResult};
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::itemset::ItemSet;
use crate::rng::{self, Label};
use crate::valuations::PriceVector;

pub const TRANSCRIPT_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    /// One fixed-price auction at given prices, all bidders in order.
    FpaFixed,
    /// Binary search over candidate prices with a known scale ψ.
    BinarySearch,
    /// Sampling wrapper: second-price auction of the grand bundle, or binary
    /// search with ψ learned from the sampled bidders.
    Final,
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MechanismKind::FpaFixed => "fpa-fixed",
            MechanismKind::BinarySearch => "binary-search",
            MechanismKind::Final => "final",
        })
    }
}

/// Randomness of the binary-search mechanism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCoins {
    /// Round `r_i ∈ 1..=β+1` of every bidder, indexed by bidder.
    pub rounds: Vec<u32>,
    /// Round `r* ∈ 1..=β+1` whose allocation is final.
    pub final_round: u32,
}

impl SearchCoins {
    pub fn draw(seed: u64, n: usize, beta: u32) -> Self {
        SearchCoins {
            rounds: (0..n)
                .map(|i| rng::uniform_round(seed, Label::RoundAssignment, i as u32, beta + 1))
                .collect(),
            final_round: rng::uniform_round(seed, Label::FinalRound, 0, beta + 1),
        }
    }

    pub(crate) fn check(&self, n: usize, beta: u32) -> Result<()> {
        if self.rounds.len() != n {
            return Err(Error::input(format!(
                "round assignment covers {} bidders, instance has {n}",
                self.rounds.len()
            )));
        }
        let ok = |r: u32| (1..=beta + 1).contains(&r);
        if let Some(i) = self.rounds.iter().position(|&r| !ok(r)) {
            return Err(Error::input(format!(
                "bidder {i} assigned to round {}, outside 1..={}",
                self.rounds[i],
                beta + 1
            )));
        }
        if !ok(self.final_round) {
            return Err(Error::input(format!(
                "final round {} outside 1..={}",
                self.final_round,
                beta + 1
            )));
        }
        Ok(())
    }
}

/// Randomness of the sampling wrapper.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WrapperCoins {
    /// Membership of each bidder in the second-price sample.
    pub sample: Vec<bool>,
    /// Branch coin: `true` makes the second-price auction final.
    pub second_price: bool,
}

impl WrapperCoins {
    pub fn draw(seed: u64, n: usize) -> Self {
        WrapperCoins {
            sample: (0..n)
                .map(|i| rng::fair_coin(seed, Label::Sample, i as u32))
                .collect(),
            second_price: rng::fair_coin(seed, Label::BranchCoin, 0),
        }
    }
}

/// One executed fixed-price auction inside the binary search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub participants: Vec<usize>,
    pub prices: PriceVector,
    pub result: FpaResult,
    /// Candidate windows after narrowing; empty for round `β+1`.
    #[serde(with = "hexfloat::nested")]
    pub ladder_after: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub bidder: usize,
    #[serde(with = "hexfloat")]
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondPriceRecord {
    pub winner: Option<usize>,
    #[serde(with = "hexfloat")]
    pub price: f64,
}

/// Which step produced the final allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalSource {
    SecondPrice,
    Round(u32),
    FixedPrice,
    /// Nothing was allocated by construction (empty sample or ψ = 0).
    Nothing,
}

/// The realized result of a run. Only the final allocation's payments are
/// charged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub allocation: Allocation,
    #[serde(with = "hexfloat::vec")]
    pub utilities: Vec<f64>,
    #[serde(with = "hexfloat::vec")]
    pub payments: Vec<f64>,
    #[serde(with = "hexfloat")]
    pub revenue: f64,
    #[serde(with = "hexfloat")]
    pub welfare: f64,
    /// Value plus demand queries posed during the run.
    pub queries: usize,
    pub source: FinalSource,
}

impl Settlement {
    pub(crate) fn nothing(n: usize, queries: usize) -> Self {
        Settlement {
            allocation: Allocation::empty(n),
            utilities: vec![0.0; n],
            payments: vec![0.0; n],
            revenue: 0.0,
            welfare: 0.0,
            queries,
            source: FinalSource::Nothing,
        }
    }
}

/// Everything needed to replay a run bit for bit, plus what it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub format: u32,
    pub mechanism: MechanismKind,
    pub seed: Option<u64>,
    pub n: usize,
    pub m: usize,
    pub items: ItemSet,
    pub wrapper_coins: Option<WrapperCoins>,
    pub search_coins: Option<SearchCoins>,
    #[serde(with = "hexfloat::option")]
    pub psi: Option<f64>,
    #[serde(with = "hexfloat::vec")]
    pub candidate_prices: Vec<f64>,
    pub fixed_prices: Option<PriceVector>,
    pub value_reports: Vec<ValueReport>,
    pub second_price: Option<SecondPriceRecord>,
    pub rounds: Vec<RoundRecord>,
    pub deviation: Option<Deviation>,
    pub settlement: Settlement,
}

impl Transcript {
    pub(crate) fn new(
        mechanism: MechanismKind,
        seed: Option<u64>,
        n: usize,
        m: usize,
        items: ItemSet,
    ) -> Self {
        Transcript {
            format: TRANSCRIPT_FORMAT,
            mechanism,
            seed,
            n,
            m,
            items,
            wrapper_coins: None,
            search_coins: None,
            psi: None,
            candidate_prices: Vec::new(),
            fixed_prices: None,
            value_reports: Vec::new(),
            second_price: None,
            rounds: Vec::new(),
            deviation: None,
            settlement: Settlement::nothing(n, 0),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serialization is infallible")
    }

    /// Parses transcript JSON; errors name the offending field.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let t: Transcript = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::input(format!("transcript JSON at `{}`: {}", e.path(), e.inner()))
        })?;
        if t.format != TRANSCRIPT_FORMAT {
            return Err(Error::input(format!(
                "unsupported transcript format {}",
                t.format
            )));
        }
        Ok(t)
    }
}

/// A finished run: the settlement, with its transcript.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub transcript: Transcript,
}

impl Outcome {
    pub fn allocation(&self) -> &Allocation {
        &self.transcript.settlement.allocation
    }

    pub fn utilities(&self) -> &[f64] {
        &self.transcript.settlement.utilities
    }

    pub fn payments(&self) -> &[f64] {
        &self.transcript.settlement.payments
    }

    pub fn revenue(&self) -> f64 {
        self.transcript.settlement.revenue
    }

    pub fn welfare(&self) -> f64 {
        self.transcript.settlement.welfare
    }

    pub fn queries(&self) -> usize {
        self.transcript.settlement.queries
    }

    pub fn source(&self) -> FinalSource {
        self.transcript.settlement.source
    }

    pub fn settlement(&self) -> &Settlement {
        &self.transcript.settlement
    }
}

/// Settlement of the final FPA: its hypothetical payments become real.
pub(crate) fn settle_fpa(
    result: &FpaResult,
    welfare: f64,
    queries: usize,
    source: FinalSource,
) -> Settlement {
    Settlement {
        allocation: result.allocation.clone(),
        utilities: result.utilities.clone(),
        payments: result.payments.clone(),
        revenue: result.revenue(),
        welfare,
        queries,
        source,
    }
}
