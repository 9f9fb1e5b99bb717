//! Bidder valuations over bundles of items, the value/demand query
//! interface the mechanisms talk to, class validators and instance
//! generators.

mod demand;
mod generate;
mod instance;
mod repair;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::itemset::{ItemSet, MAX_ITEMS};

pub use demand::{PriceVector, ValuationOracle, DEFAULT_EXHAUSTIVE_LIMIT};
pub use generate::{generate_instance, GeneratorKind, GeneratorSpec, MAX_BIDDERS};
pub use instance::Instance;
pub use repair::subadditive_repair;
pub use validate::{
    find_monotonicity_violation, find_subadditivity_violation, is_monotone, is_subadditive,
    MONOTONE_LIMIT, SUBADDITIVE_LIMIT, TOLERANCE,
};

/// Largest universe for which an explicit `2^m` value table is accepted.
pub const EXPLICIT_LIMIT: usize = 16;

/// A valuation function `v: 2^M -> R+`, one variant per supported class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Valuation {
    /// `v(S) = sum of values[e] over e in S`.
    Additive { values: Vec<f64> },
    /// `v(S) = max of values[e] over e in S`.
    UnitDemand { values: Vec<f64> },
    /// Pointwise maximum of additive clauses.
    Xos { clauses: Vec<Vec<f64>> },
    /// `v(S) = min(budget, sum of values[e])`.
    BudgetAdditive { values: Vec<f64>, budget: f64 },
    /// Weighted coverage: item `e` covers ground elements `covers[e]`;
    /// `v(S)` is the total weight of the union.
    Coverage {
        weights: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    /// `v(S) = steps[|S|]` for a step function on `0..=m`.
    SymmetricConcave { steps: Vec<f64> },
    /// Full value table indexed by bitmask. `subadditive` labels the table
    /// as claiming subadditivity, which `verify` then enforces.
    Explicit {
        #[serde(serialize_with = "table_to_map", deserialize_with = "table_from_map")]
        table: Vec<f64>,
        #[serde(default = "default_true")]
        subadditive: bool,
    },
}

/// Externally tagged twin of [`Valuation`]. serde buffers internally tagged
/// content, which drops field paths from errors; this form streams.
#[derive(Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
enum Tagged {
    Additive {
        values: Vec<f64>,
    },
    UnitDemand {
        values: Vec<f64>,
    },
    Xos {
        clauses: Vec<Vec<f64>>,
    },
    BudgetAdditive {
        values: Vec<f64>,
        budget: f64,
    },
    Coverage {
        weights: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    SymmetricConcave {
        steps: Vec<f64>,
    },
    Explicit {
        #[serde(deserialize_with = "table_from_map")]
        table: Vec<f64>,
        #[serde(default = "default_true")]
        subadditive: bool,
    },
}

impl From<Tagged> for Valuation {
    fn from(t: Tagged) -> Self {
        match t {
            Tagged::Additive { values } => Valuation::Additive { values },
            Tagged::UnitDemand { values } => Valuation::UnitDemand { values },
            Tagged::Xos { clauses } => Valuation::Xos { clauses },
            Tagged::BudgetAdditive { values, budget } => {
                Valuation::BudgetAdditive { values, budget }
            }
            Tagged::Coverage { weights, covers } => Valuation::Coverage { weights, covers },
            Tagged::SymmetricConcave { steps } => Valuation::SymmetricConcave { steps },
            Tagged::Explicit { table, subadditive } => Valuation::Explicit { table, subadditive },
        }
    }
}

/// Parses one `{"kind": ..., ...}` object. On failure returns the path below
/// the object (like `.values[1]`, possibly empty) and the message.
pub(crate) fn valuation_from_value(
    v: serde_json::Value,
) -> std::result::Result<Valuation, (String, String)> {
    let serde_json::Value::Object(mut map) = v else {
        return Err((
            String::new(),
            "expected an object with a `kind` field".into(),
        ));
    };
    let kind = match map.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return Err((".kind".into(), "expected a string".into())),
        None => return Err((String::new(), "missing field `kind`".into())),
    };
    let mut outer = serde_json::Map::new();
    outer.insert(kind, serde_json::Value::Object(map));
    serde_path_to_error::deserialize::<_, Tagged>(serde_json::Value::Object(outer))
        .map(Valuation::from)
        .map_err(|e| {
            // first segment is the variant name
            let path: String = e
                .path()
                .iter()
                .skip(1)
                .map(|seg| match seg {
                    serde_path_to_error::Segment::Seq { index } => format!("[{index}]"),
                    serde_path_to_error::Segment::Map { key } => format!(".{key}"),
                    serde_path_to_error::Segment::Enum { variant } => format!(".{variant}"),
                    serde_path_to_error::Segment::Unknown => ".?".into(),
                })
                .collect();
            (path, e.into_inner().to_string())
        })
}

fn default_true() -> bool {
    true
}

/// Valuation classes, used for reporting and routing demand queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Additive,
    UnitDemand,
    Xos,
    BudgetAdditive,
    Coverage,
    SymmetricConcave,
    Explicit,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Additive => "additive",
            Kind::UnitDemand => "unit-demand",
            Kind::Xos => "xos",
            Kind::BudgetAdditive => "budget-additive",
            Kind::Coverage => "coverage",
            Kind::SymmetricConcave => "symmetric-concave",
            Kind::Explicit => "explicit",
        })
    }
}

impl Valuation {
    pub fn kind(&self) -> Kind {
        match self {
            Valuation::Additive { .. } => Kind::Additive,
            Valuation::UnitDemand { .. } => Kind::UnitDemand,
            Valuation::Xos { .. } => Kind::Xos,
            Valuation::BudgetAdditive { .. } => Kind::BudgetAdditive,
            Valuation::Coverage { .. } => Kind::Coverage,
            Valuation::SymmetricConcave { .. } => Kind::SymmetricConcave,
            Valuation::Explicit { .. } => Kind::Explicit,
        }
    }

    /// Number of items this valuation is defined over.
    pub fn num_items(&self) -> usize {
        match self {
            Valuation::Additive { values }
            | Valuation::UnitDemand { values }
            | Valuation::BudgetAdditive { values, .. } => values.len(),
            Valuation::Xos { clauses } => clauses.first().map_or(0, Vec::len),
            Valuation::Coverage { covers, .. } => covers.len(),
            Valuation::SymmetricConcave { steps } => steps.len().saturating_sub(1),
            Valuation::Explicit { table, .. } => table.len().max(1).trailing_zeros() as usize,
        }
    }

    /// Structural checks: shapes agree with `m`, every number is finite and
    /// non-negative, and `v(∅) = 0`. Monotonicity and subadditivity are left
    /// to the validators so that `verify` can report them.
    pub fn check(&self, m: usize) -> Result<()> {
        let nonneg = |what: &str, xs: &[f64]| -> Result<()> {
            match xs.iter().position(|x| !x.is_finite() || *x < 0.0) {
                Some(k) => Err(Error::input(format!(
                    "{what}[{k}] = {} must be finite and non-negative",
                    xs[k]
                ))),
                None => Ok(()),
            }
        };
        let len_is = |what: &str, got: usize, want: usize| -> Result<()> {
            if got == want {
                Ok(())
            } else {
                Err(Error::input(format!(
                    "{what} has length {got}, expected {want}"
                )))
            }
        };
        match self {
            Valuation::Additive { values } | Valuation::UnitDemand { values } => {
                len_is("values", values.len(), m)?;
                nonneg("values", values)
            }
            Valuation::BudgetAdditive { values, budget } => {
                len_is("values", values.len(), m)?;
                nonneg("values", values)?;
                nonneg("budget", std::slice::from_ref(budget))
            }
            Valuation::Xos { clauses } => {
                if clauses.is_empty() {
                    return Err(Error::input("clauses must not be empty"));
                }
                for (c, clause) in clauses.iter().enumerate() {
                    len_is(&format!("clauses[{c}]"), clause.len(), m)?;
                    nonneg(&format!("clauses[{c}]"), clause)?;
                }
                Ok(())
            }
            Valuation::Coverage { weights, covers } => {
                nonneg("weights", weights)?;
                len_is("covers", covers.len(), m)?;
                for (e, els) in covers.iter().enumerate() {
                    if let Some(bad) = els.iter().find(|&&j| j >= weights.len()) {
                        return Err(Error::input(format!(
                            "covers[{e}] references element {bad}, but only {} weights exist",
                            weights.len()
                        )));
                    }
                }
                Ok(())
            }
            Valuation::SymmetricConcave { steps } => {
                len_is("steps", steps.len(), m + 1)?;
                nonneg("steps", steps)?;
                if steps[0] != 0.0 {
                    return Err(Error::input("steps[0] must be 0 (v(∅) = 0)"));
                }
                Ok(())
            }
            Valuation::Explicit { table, .. } => {
                if m > EXPLICIT_LIMIT {
                    return Err(Error::capability(format!(
                        "explicit tables support at most {EXPLICIT_LIMIT} items, got {m}"
                    )));
                }
                len_is("table", table.len(), 1 << m)?;
                nonneg("table", table)?;
                if table[0] != 0.0 {
                    return Err(Error::input("table entry for the empty set must be 0"));
                }
                Ok(())
            }
        }
    }

    /// Evaluates `v(S)` directly from the representation.
    pub fn value(&self, s: ItemSet) -> f64 {
        match self {
            Valuation::Additive { values } => s.iter().fold(0.0, |acc, e| acc + values[e]),
            Valuation::UnitDemand { values } => s.iter().fold(0.0, |acc, e| acc.max(values[e])),
            Valuation::Xos { clauses } => clauses
                .iter()
                .map(|c| s.iter().fold(0.0, |acc, e| acc + c[e]))
                .fold(0.0, f64::max),
            Valuation::BudgetAdditive { values, budget } => {
                budget.min(s.iter().fold(0.0, |acc, e| acc + values[e]))
            }
            Valuation::Coverage { weights, covers } => {
                let mut covered = vec![false; weights.len()];
                for e in s.iter() {
                    for &j in &covers[e] {
                        covered[j] = true;
                    }
                }
                covered
                    .iter()
                    .zip(weights)
                    .filter(|(c, _)| **c)
                    .fold(0.0, |acc, (_, w)| acc + w)
            }
            Valuation::SymmetricConcave { steps } => steps[s.len()],
            Valuation::Explicit { table, .. } => table[s.bits() as usize],
        }
    }
}

fn table_to_map<S: Serializer>(table: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(table.len()))?;
    for (mask, v) in table.iter().enumerate() {
        map.serialize_entry(&mask.to_string(), v)?;
    }
    map.end()
}

fn table_from_map<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    use serde::de::Error as _;
    let raw = BTreeMap::<String, f64>::deserialize(d)?;
    let mut entries = BTreeMap::new();
    for (key, v) in raw {
        let mask: u32 = key
            .trim()
            .parse()
            .map_err(|_| D::Error::custom(format!("table key {key:?} is not a bitmask")))?;
        if mask as u64 >= 1u64 << MAX_ITEMS.min(EXPLICIT_LIMIT) {
            return Err(D::Error::custom(format!("table key {mask} is too large")));
        }
        if entries.insert(mask, v).is_some() {
            return Err(D::Error::custom(format!("duplicate table key {mask}")));
        }
    }
    let len = entries.len();
    if !len.is_power_of_two() {
        return Err(D::Error::custom(format!(
            "table has {len} entries; expected 2^m"
        )));
    }
    let mut table = Vec::with_capacity(len);
    for (expect, (mask, v)) in entries.into_iter().enumerate() {
        if mask as usize != expect {
            return Err(D::Error::custom(format!(
                "table is missing bitmask {expect}"
            )));
        }
        table.push(v);
    }
    Ok(table)
}
