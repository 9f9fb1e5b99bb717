use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::validate::{
    monotonicity_violation_in, subadditivity_violation_in, MONOTONE_LIMIT, SUBADDITIVE_LIMIT,
};
use super::{subadditive_repair, Instance, Valuation, EXPLICIT_LIMIT};
use crate::error::{Error, Result};
use crate::itemset::{ItemSet, MAX_ITEMS};
use crate::rng::{self, Label};

pub const MAX_BIDDERS: usize = 1 << 16;
const MAX_PARTS: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Additive,
    UnitDemand,
    Xos,
    BudgetAdditive,
    Coverage,
    SymmetricConcave,
    ExplicitSubadditive,
}

/// Random instance recipe. Every generated number is an integer drawn from
/// `min_value..=max_value` times `2^unit_log2`, which keeps all mechanism
/// arithmetic exact in binary floating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub min_value: u32,
    pub max_value: u32,
    #[serde(default)]
    pub unit_log2: i32,
    /// XOS: number of additive clauses (default 3).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clauses: Option<usize>,
    /// Coverage: size of the ground set (default `2m`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<usize>,
    /// Budget-additive: inclusive integer range for the budget
    /// (default `[max_value, max_value * m / 2]`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<[u32; 2]>,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, m: usize, max_value: u32) -> Self {
        GeneratorSpec {
            kind,
            n,
            m,
            min_value: 0,
            max_value,
            unit_log2: 0,
            clauses: None,
            elements: None,
            budget: None,
        }
    }

    /// Parses a spec; errors name the offending field.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let spec: GeneratorSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::input(format!("generator spec at `{}`: {}", e.path(), e.inner()))
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > MAX_ITEMS {
            return Err(Error::input(format!(
                "m must be in 1..={MAX_ITEMS}, got {}",
                self.m
            )));
        }
        if self.n > MAX_BIDDERS {
            return Err(Error::input(format!(
                "n must be at most {MAX_BIDDERS}, got {}",
                self.n
            )));
        }
        if self.clauses.is_some_and(|k| k > MAX_PARTS)
            || self.elements.is_some_and(|k| k > MAX_PARTS)
        {
            return Err(Error::input(format!(
                "clauses and elements are capped at {MAX_PARTS}"
            )));
        }
        if self.min_value > self.max_value {
            return Err(Error::input("min_value exceeds max_value"));
        }
        if !(-60..=60).contains(&self.unit_log2) {
            return Err(Error::input("unit_log2 must be within -60..=60"));
        }
        if self.clauses == Some(0) {
            return Err(Error::input("xos needs at least one clause"));
        }
        if self.elements == Some(0) {
            return Err(Error::input("coverage needs at least one ground element"));
        }
        if let Some([lo, hi]) = self.budget {
            if lo > hi {
                return Err(Error::input("budget range is empty"));
            }
        }
        if self.kind == GeneratorKind::ExplicitSubadditive && self.m > EXPLICIT_LIMIT {
            return Err(Error::capability(format!(
                "explicit tables support at most {EXPLICIT_LIMIT} items"
            )));
        }
        let irrelevant = match self.kind {
            GeneratorKind::Xos => self.elements.is_some() || self.budget.is_some(),
            GeneratorKind::Coverage => self.clauses.is_some() || self.budget.is_some(),
            GeneratorKind::BudgetAdditive => self.clauses.is_some() || self.elements.is_some(),
            _ => self.clauses.is_some() || self.elements.is_some() || self.budget.is_some(),
        };
        if irrelevant {
            return Err(Error::input(format!(
                "parameters given that do not apply to {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

fn draw(rng: &mut impl Rng, lo: u32, hi: u32, unit: f64) -> f64 {
    rng.gen_range(lo..=hi) as f64 * unit
}

/// Draws an instance; identical `(spec, seed)` give identical instances.
pub fn generate_instance(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    spec.validate()?;
    let m = spec.m;
    let unit = 2f64.powi(spec.unit_log2);
    let mut bidders = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let mut rng = rng::stream(seed, Label::Generator, i as u32);
        let (lo, hi) = (spec.min_value, spec.max_value);
        let v = match spec.kind {
            GeneratorKind::Additive => Valuation::Additive {
                values: (0..m).map(|_| draw(&mut rng, lo, hi, unit)).collect(),
            },
            GeneratorKind::UnitDemand => Valuation::UnitDemand {
                values: (0..m).map(|_| draw(&mut rng, lo, hi, unit)).collect(),
            },
            GeneratorKind::Xos => Valuation::Xos {
                clauses: (0..spec.clauses.unwrap_or(3))
                    .map(|_| (0..m).map(|_| draw(&mut rng, lo, hi, unit)).collect())
                    .collect(),
            },
            GeneratorKind::BudgetAdditive => {
                let values = (0..m).map(|_| draw(&mut rng, lo, hi, unit)).collect();
                let [blo, bhi] = spec
                    .budget
                    .unwrap_or([hi, (hi as u64 * m as u64 / 2).min(u32::MAX as u64) as u32]);
                Valuation::BudgetAdditive {
                    values,
                    budget: draw(&mut rng, blo, bhi.max(blo), unit),
                }
            }
            GeneratorKind::Coverage => {
                let elements = spec.elements.unwrap_or(2 * m);
                let weights = (0..elements)
                    .map(|_| draw(&mut rng, lo, hi, unit))
                    .collect();
                let mut covers = Vec::with_capacity(m);
                for _ in 0..m {
                    let mut els: Vec<usize> = (0..elements).collect();
                    els.shuffle(&mut rng);
                    let k = rng.gen_range(1..=elements);
                    els.truncate(k);
                    els.sort_unstable();
                    covers.push(els);
                }
                Valuation::Coverage { weights, covers }
            }
            GeneratorKind::SymmetricConcave => {
                let mut increments: Vec<f64> =
                    (0..m).map(|_| draw(&mut rng, lo, hi, unit)).collect();
                increments.sort_by(|a, b| b.total_cmp(a));
                let mut steps = vec![0.0];
                for d in increments {
                    steps.push(steps[steps.len() - 1] + d);
                }
                Valuation::SymmetricConcave { steps }
            }
            GeneratorKind::ExplicitSubadditive => {
                let mut table: Vec<f64> = (0..1usize << m)
                    .map(|_| draw(&mut rng, lo, hi, unit))
                    .collect();
                table[0] = 0.0;
                subadditive_repair(table)?.valuation().clone()
            }
        };
        let value = |s: ItemSet| v.value(s);
        if (m <= MONOTONE_LIMIT && monotonicity_violation_in(m, value).is_some())
            || (m <= SUBADDITIVE_LIMIT && subadditivity_violation_in(m, value).is_some())
        {
            return Err(Error::Internal(format!(
                "generated bidder {i} is not monotone subadditive"
            )));
        }
        bidders.push(v);
    }
    Instance::new(m, bidders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::{is_monotone, is_subadditive};

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::new(GeneratorKind::Additive, 2, 2, 8);
        let a = generate_instance(&spec, 7).unwrap();
        let b = generate_instance(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_instance(&spec, 8).unwrap());
    }

    #[test]
    fn xos_value_is_max_over_clauses() {
        let mut spec = GeneratorSpec::new(GeneratorKind::Xos, 1, 5, 9);
        spec.clauses = Some(3);
        let inst = generate_instance(&spec, 3).unwrap();
        let Valuation::Xos { clauses } = &inst.bidders()[0] else {
            panic!("expected xos");
        };
        assert_eq!(clauses.len(), 3);
        for bits in [0b00001u32, 0b10110, 0b11111, 0b01010] {
            let s = ItemSet::from_bits(bits);
            let by_hand = clauses
                .iter()
                .map(|c| s.iter().map(|e| c[e]).sum::<f64>())
                .fold(0.0, f64::max);
            assert_eq!(inst.oracles().unwrap()[0].value_query(s).unwrap(), by_hand);
        }
    }

    #[test]
    fn every_kind_is_monotone_and_subadditive() {
        use GeneratorKind::*;
        for kind in [
            Additive,
            UnitDemand,
            Xos,
            BudgetAdditive,
            Coverage,
            SymmetricConcave,
            ExplicitSubadditive,
        ] {
            let spec = GeneratorSpec::new(kind, 3, 4, 10);
            for seed in 0..5 {
                let inst = generate_instance(&spec, seed).unwrap();
                for o in inst.oracles().unwrap() {
                    assert!(is_monotone(&o).unwrap(), "{kind:?}");
                    assert!(is_subadditive(&o).unwrap(), "{kind:?}");
                }
            }
        }
    }

    #[test]
    fn dyadic_units_scale_values() {
        let mut spec = GeneratorSpec::new(GeneratorKind::Additive, 1, 4, 8);
        spec.unit_log2 = -2;
        let inst = generate_instance(&spec, 1).unwrap();
        let Valuation::Additive { values } = &inst.bidders()[0] else {
            unreachable!()
        };
        assert!(values.iter().all(|v| (v * 4.0).fract() == 0.0 && *v <= 2.0));
    }

    #[test]
    fn rejects_inconsistent_parameters() {
        let mut spec = GeneratorSpec::new(GeneratorKind::Additive, 1, 4, 8);
        spec.min_value = 9;
        assert!(generate_instance(&spec, 0).is_err());
        let mut spec = GeneratorSpec::new(GeneratorKind::Additive, 1, 4, 8);
        spec.clauses = Some(2);
        assert!(generate_instance(&spec, 0).is_err());
        let spec = GeneratorSpec::new(GeneratorKind::Additive, 1, 0, 8);
        assert!(generate_instance(&spec, 0).is_err());
        let spec = GeneratorSpec::new(GeneratorKind::ExplicitSubadditive, 1, 17, 8);
        assert!(matches!(
            generate_instance(&spec, 0),
            Err(Error::Capability(_))
        ));
    }
}
