use serde::{Deserialize, Serialize};

use super::{valuation_from_value, Valuation, ValuationOracle, DEFAULT_EXHAUSTIVE_LIMIT};
use crate::error::{Error, Result};
use crate::itemset::MAX_ITEMS;

/// Auction ground truth: `m` items and an ordered list of bidders. The
/// array order is the auction order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    m: usize,
    bidders: Vec<Valuation>,
}

impl Instance {
    pub fn new(m: usize, bidders: Vec<Valuation>) -> Result<Self> {
        let inst = Instance { m, bidders };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<()> {
        if self.m > MAX_ITEMS {
            return Err(Error::input(format!("m = {} exceeds {MAX_ITEMS}", self.m)));
        }
        for (i, v) in self.bidders.iter().enumerate() {
            v.check(self.m).map_err(|e| match e {
                Error::Input(msg) => Error::Input(format!("bidders[{i}]: {msg}")),
                Error::Capability(msg) => Error::Capability(format!("bidders[{i}]: {msg}")),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn num_items(&self) -> usize {
        self.m
    }

    pub fn num_bidders(&self) -> usize {
        self.bidders.len()
    }

    pub fn bidders(&self) -> &[Valuation] {
        &self.bidders
    }

    pub fn oracles(&self) -> Result<Vec<ValuationOracle>> {
        self.oracles_with_limit(DEFAULT_EXHAUSTIVE_LIMIT)
    }

    pub fn oracles_with_limit(&self, exhaustive_limit: usize) -> Result<Vec<ValuationOracle>> {
        self.bidders
            .iter()
            .map(|v| ValuationOracle::with_limit(v.clone(), exhaustive_limit))
            .collect()
    }

    /// Parses and validates instance JSON. Errors name the offending field.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            m: usize,
            bidders: Vec<serde_json::Value>,
        }
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let raw: Raw = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::input(format!("instance JSON at `{}`: {}", e.path(), e.inner())))?;
        let bidders = raw
            .bidders
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                valuation_from_value(v).map_err(|(path, msg)| {
                    Error::input(format!("instance JSON at `bidders[{i}]{path}`: {msg}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(raw.m, bidders)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }
}
