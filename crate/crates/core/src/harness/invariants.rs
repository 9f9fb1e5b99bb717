use std::fmt;

use serde::{Deserialize, Serialize};

use super::run::MechanismConfig;
use crate::auction::{Bidders, FpaResult};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::mechanisms::{MechanismKind, Subroutines, Transcript};
use crate::oracle::{opt_over, DP_ITEM_LIMIT};
use crate::valuations::{
    find_monotonicity_violation, find_subadditivity_violation, Instance, Kind, Valuation,
    ValuationOracle, MONOTONE_LIMIT, SUBADDITIVE_LIMIT, TOLERANCE,
};

/// Absolute slack on the welfare identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    WelfareIdentity,
    LadderHalving,
    Direction,
    PricesInCandidates,
    QueryBudget,
    Feasibility,
    DemandOptimality,
    Validators,
    UpperBound,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub check: Check,
    pub detail: String,
}

fn finding(check: Check, detail: String) -> Finding {
    Finding { check, detail }
}

fn identity(r: &FpaResult, oracles: &[ValuationOracle], what: &str, out: &mut Vec<Finding>) {
    let welfare: f64 = r
        .allocation
        .bundles()
        .iter()
        .enumerate()
        .map(|(i, &s)| oracles[i].value_unchecked(s))
        .sum();
    let lhs = r.total_utility() + r.revenue();
    if (lhs - welfare).abs() > IDENTITY_TOLERANCE {
        out.push(finding(
            Check::WelfareIdentity,
            format!("{what}: utilities + revenue = {lhs}, welfare = {welfare}"),
        ));
    }
}

/// Checks one transcript against the structural invariants of its mechanism.
/// `opt` enables the upper-bound check.
pub fn check_transcript(
    oracles: &[ValuationOracle],
    t: &Transcript,
    opt: Option<f64>,
) -> Vec<Finding> {
    let mut out = Vec::new();
    let n = t.n;
    let s = &t.settlement;

    // welfare identity and feasibility, every round and the settlement
    for r in &t.rounds {
        identity(&r.result, oracles, &format!("round {}", r.round), &mut out);
        if !r.result.allocation.is_feasible(t.items) {
            out.push(finding(
                Check::Feasibility,
                format!(
                    "round {} allocates {:?}",
                    r.round,
                    r.result.allocation.bundles()
                ),
            ));
        }
    }
    let settled: f64 = s.utilities.iter().sum::<f64>() + s.revenue;
    if (settled - s.welfare).abs() > IDENTITY_TOLERANCE {
        out.push(finding(
            Check::WelfareIdentity,
            format!(
                "settlement: utilities + revenue = {settled}, welfare = {}",
                s.welfare
            ),
        ));
    }
    if !s.allocation.is_feasible(t.items) {
        out.push(finding(
            Check::Feasibility,
            format!("settlement allocates {:?}", s.allocation.bundles()),
        ));
    }

    // queries: at most one per bidder, and the count matches what was posed
    let posed = t.value_reports.len()
        + t.rounds
            .iter()
            .map(|r| r.result.queries.len())
            .sum::<usize>();
    let mut asked = vec![0usize; n];
    for i in t.value_reports.iter().map(|r| r.bidder) {
        asked[i] += 1;
    }
    for q in t.rounds.iter().flat_map(|r| &r.result.queries) {
        asked[q.bidder] += 1;
    }
    if s.queries > n || posed != s.queries || asked.iter().any(|&c| c > 1) {
        out.push(finding(
            Check::QueryBudget,
            format!(
                "{} queries recorded, {posed} posed, per bidder {asked:?}, n = {n}",
                s.queries
            ),
        ));
    }

    if t.deviation.is_none() {
        for r in &t.rounds {
            for q in &r.result.queries {
                let o = &oracles[q.bidder];
                let Ok(best) = o.exhaustive_demand(&r.prices, q.available) else {
                    continue;
                };
                let took = r.result.allocation.bundle(q.bidder);
                let (u, u_best) = (o.utility(&r.prices, took), o.utility(&r.prices, best));
                if !took.is_subset_of(q.available) || u < u_best - TOLERANCE {
                    out.push(finding(
                        Check::DemandOptimality,
                        format!(
                            "round {}: bidder {} took {took} (utility {u}) from {}, best is {best} ({u_best})",
                            r.round, q.bidder, q.available
                        ),
                    ));
                }
            }
        }
    }

    if matches!(
        t.mechanism,
        MechanismKind::BinarySearch | MechanismKind::Final
    ) && !t.candidate_prices.is_empty()
    {
        let b = &t.candidate_prices;
        let beta = b.len().trailing_zeros();
        for r in &t.rounds {
            if let Some(e) = r.prices.as_slice().iter().position(|p| !b.contains(p)) {
                out.push(finding(
                    Check::PricesInCandidates,
                    format!(
                        "round {}: price {} of item {e} is not a candidate",
                        r.round,
                        r.prices.get(e)
                    ),
                ));
            }
            if r.round > beta {
                continue;
            }
            let want = b.len() >> r.round;
            if r.ladder_after.len() != t.m || r.ladder_after.iter().any(|w| w.len() != want) {
                let lens: Vec<usize> = r.ladder_after.iter().map(Vec::len).collect();
                out.push(finding(
                    Check::LadderHalving,
                    format!(
                        "round {}: ladder lengths {lens:?}, expected {want} each",
                        r.round
                    ),
                ));
                continue;
            }
            for (e, w) in r.ladder_after.iter().enumerate() {
                let p = r.prices.get(e);
                let sold = r.result.sold.contains(e);
                let ok = if sold { w[0] >= p } else { w[w.len() - 1] < p };
                if !ok {
                    out.push(finding(
                        Check::Direction,
                        format!(
                            "round {}: item {e} {} at {p}, kept {w:?}",
                            r.round,
                            if sold { "sold" } else { "unsold" }
                        ),
                    ));
                }
            }
        }
    }

    if let Some(opt) = opt {
        if s.welfare > opt + TOLERANCE {
            out.push(finding(
                Check::UpperBound,
                format!("welfare {} exceeds OPT {opt}", s.welfare),
            ));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "kebab-case")]
pub enum ValidatorFinding {
    NotMonotone {
        bidder: usize,
        set: ItemSet,
        item: usize,
    },
    NotSubadditive {
        bidder: usize,
        s: ItemSet,
        t: ItemSet,
    },
}

impl fmt::Display for ValidatorFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidatorFinding::NotMonotone { bidder, set, item } => {
                write!(
                    f,
                    "bidder {bidder}: v({}) > v({set}), not monotone",
                    set.without(*item)
                )
            }
            ValidatorFinding::NotSubadditive { bidder, s, t } => {
                write!(
                    f,
                    "bidder {bidder}: v({}) > v({s}) + v({t}), not subadditive",
                    s.union(*t)
                )
            }
        }
    }
}

fn structurally_subadditive(v: &Valuation) -> bool {
    !matches!(
        v,
        Valuation::SymmetricConcave { .. } | Valuation::Explicit { .. }
    )
}

fn claims_subadditive(v: &Valuation) -> bool {
    !matches!(
        v,
        Valuation::Explicit {
            subadditive: false,
            ..
        }
    )
}

/// Step-function checks, valid for any `m`.
fn symmetric_findings(bidder: usize, steps: &[f64], out: &mut Vec<ValidatorFinding>) {
    let m = steps.len() - 1;
    let prefix = |k: usize| ItemSet::full(k);
    if let Some(k) = (1..=m).find(|&k| steps[k - 1] > steps[k] + TOLERANCE) {
        out.push(ValidatorFinding::NotMonotone {
            bidder,
            set: prefix(k),
            item: k - 1,
        });
    }
    for a in 1..=m {
        for b in 1..=m - a {
            if steps[a + b] > steps[a] + steps[b] + TOLERANCE {
                let t = ItemSet::from_bits(prefix(a + b).bits() & !prefix(a).bits());
                out.push(ValidatorFinding::NotSubadditive {
                    bidder,
                    s: prefix(a),
                    t,
                });
                return;
            }
        }
    }
}

/// Runs the monotonicity and subadditivity validators on every bidder.
/// Tables claiming subadditivity are checked by enumeration, so large ones
/// are a capability error.
pub fn verify_instance(instance: &Instance) -> Result<Vec<ValidatorFinding>> {
    let oracles = instance.oracles()?;
    let m = instance.num_items();
    let mut out = Vec::new();
    for (bidder, o) in oracles.iter().enumerate() {
        let v = o.valuation();
        if let Valuation::SymmetricConcave { steps } = v {
            symmetric_findings(bidder, steps, &mut out);
            continue;
        }
        if m <= MONOTONE_LIMIT {
            if let Some((set, item)) = find_monotonicity_violation(o)? {
                out.push(ValidatorFinding::NotMonotone { bidder, set, item });
            }
        } else if o.kind() == Kind::Explicit {
            return Err(Error::capability(format!("explicit table over {m} items")));
        }
        if !claims_subadditive(v) {
            continue;
        }
        if m <= SUBADDITIVE_LIMIT {
            if let Some((s, t)) = find_subadditivity_violation(o)? {
                out.push(ValidatorFinding::NotSubadditive { bidder, s, t });
            }
        } else if !structurally_subadditive(v) {
            return Err(Error::capability(format!(
                "bidder {bidder}: subadditivity of an explicit table is checked up to {SUBADDITIVE_LIMIT} items, got {m}"
            )));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantFailure {
    pub check: Check,
    pub instance: usize,
    pub mechanism: Option<MechanismKind>,
    /// Seed that reproduces the run; absent for per-instance checks.
    pub seed: Option<u64>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub instances: usize,
    pub runs: usize,
    pub failures: Vec<InvariantFailure>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, check: Check) -> bool {
        self.failures.iter().any(|f| f.check == check)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct InvariantSuite {
    pub runs_per_instance: u64,
    pub subroutines: Subroutines,
}

impl Default for InvariantSuite {
    fn default() -> Self {
        InvariantSuite {
            runs_per_instance: 8,
            subroutines: Subroutines::default(),
        }
    }
}

impl InvariantSuite {
    /// Runs the binary search (exact ψ) and the final mechanism with seeds
    /// `seed..seed+runs_per_instance` on every instance.
    pub fn run(&self, instances: &[Instance], seed: u64) -> Result<InvariantReport> {
        let mut report = InvariantReport {
            instances: instances.len(),
            ..InvariantReport::default()
        };
        for (idx, inst) in instances.iter().enumerate() {
            let oracles = inst.oracles()?;
            let m = inst.num_items();
            match verify_instance(inst) {
                Ok(found) => report
                    .failures
                    .extend(found.into_iter().map(|f| InvariantFailure {
                        check: Check::Validators,
                        instance: idx,
                        mechanism: None,
                        seed: None,
                        detail: f.to_string(),
                    })),
                Err(Error::Capability(_)) => {}
                Err(e) => return Err(e),
            }
            let opt = if m <= DP_ITEM_LIMIT {
                Some(opt_over(&oracles, m)?.welfare)
            } else {
                None
            };
            let bidders = Bidders::new(&oracles, m)?;
            for kind in [MechanismKind::BinarySearch, MechanismKind::Final] {
                let mech = MechanismConfig::new(kind).with_subroutines(self.subroutines);
                for k in 0..self.runs_per_instance {
                    let s = seed.wrapping_add(k);
                    let out = mech.run(&bidders, s)?;
                    report.runs += 1;
                    for f in check_transcript(&oracles, &out.transcript, opt) {
                        report.failures.push(InvariantFailure {
                            check: f.check,
                            instance: idx,
                            mechanism: Some(kind),
                            seed: Some(s),
                            detail: f.detail,
                        });
                    }
                }
            }
        }
        Ok(report)
    }
}

pub fn invariant_suite(instances: &[Instance], seed: u64) -> Result<InvariantReport> {
    InvariantSuite::default().run(instances, seed)
}
