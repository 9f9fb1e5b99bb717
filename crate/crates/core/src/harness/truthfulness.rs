//! Exhaustive search for profitable unilateral deviations with the coins
//! held fixed.

use serde::{Deserialize, Serialize};

use super::run::MechanismConfig;
use crate::auction::{Bidders, Deviation, Response};
use crate::error::{Error, Result};
use crate::mechanisms::{replay, Transcript};
use crate::valuations::ValuationOracle;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthConfig {
    /// Largest `m` for which every bundle response is tried.
    pub bundle_limit: usize,
    /// Offset around other bidders' reports in the value-misreport grid.
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for TruthConfig {
    fn default() -> Self {
        TruthConfig {
            bundle_limit: 5,
            epsilon: 1.0 / 1024.0,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub transcript: usize,
    pub seed: Option<u64>,
    pub deviation: Deviation,
    pub truthful_utility: f64,
    pub deviant_utility: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthReport {
    pub transcripts: usize,
    pub deviations_tried: usize,
    pub violations: Vec<Violation>,
}

/// Truthful transcripts for each seed, to be used as pinned coins.
pub fn pinned_transcripts(
    oracles: &[ValuationOracle],
    m: usize,
    mechanism: &MechanismConfig,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<Vec<Transcript>> {
    let bidders = Bidders::new(oracles, m)?;
    seeds
        .into_iter()
        .map(|s| mechanism.run(&bidders, s).map(|o| o.transcript))
        .collect()
}

fn value_grid(truth: f64, others: &[f64], eps: f64) -> Vec<f64> {
    let top = others.iter().copied().fold(truth, f64::max);
    let mut grid = vec![0.0, truth, 2.0 * top + 1.0];
    for &x in others {
        grid.extend([x, x + eps, (x - eps).max(0.0)]);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Every response a bidder could give instead of the truthful one, per the
/// single query it received in `t`.
fn alternatives(
    t: &Transcript,
    oracles: &[ValuationOracle],
    bidder: usize,
    eps: f64,
) -> Vec<Response> {
    if let Some(r) = t.value_reports.iter().find(|r| r.bidder == bidder) {
        let others: Vec<f64> = t
            .value_reports
            .iter()
            .filter(|o| o.bidder != bidder)
            .map(|o| o.value)
            .collect();
        let truth = oracles[bidder].value_unchecked(t.items);
        debug_assert_eq!(truth, r.value);
        return value_grid(truth, &others, eps)
            .into_iter()
            .map(Response::Value)
            .collect();
    }
    for round in &t.rounds {
        if let Some(q) = round.result.queries.iter().find(|q| q.bidder == bidder) {
            return q.available.subsets().map(Response::Bundle).collect();
        }
    }
    Vec::new()
}

/// Replays every pinned transcript under each alternative response of each
/// queried bidder and reports any that beat the truthful utility.
pub fn truthfulness_suite(
    oracles: &[ValuationOracle],
    transcripts: &[Transcript],
    config: &TruthConfig,
) -> Result<TruthReport> {
    let mut report = TruthReport {
        transcripts: transcripts.len(),
        ..TruthReport::default()
    };
    for (idx, t) in transcripts.iter().enumerate() {
        if t.deviation.is_some() {
            return Err(Error::input(format!(
                "transcript {idx} already carries a deviation"
            )));
        }
        if t.m > config.bundle_limit {
            return Err(Error::capability(format!(
                "exhaustive bundle deviations support m <= {}, got {}",
                config.bundle_limit, t.m
            )));
        }
        let truthful = replay(t, oracles, None)?;
        for bidder in 0..t.n {
            let base = truthful.utilities()[bidder];
            for response in alternatives(t, oracles, bidder, config.epsilon) {
                let deviation = Deviation { bidder, response };
                let out = replay(t, oracles, Some(deviation))?;
                report.deviations_tried += 1;
                let u = out.utilities()[bidder];
                if u > base + config.tolerance {
                    report.violations.push(Violation {
                        transcript: idx,
                        seed: t.seed,
                        deviation,
                        truthful_utility: base,
                        deviant_utility: u,
                    });
                }
            }
        }
    }
    Ok(report)
}
