use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::MechanismConfig;
use crate::auction::Bidders;
use crate::error::Result;
use crate::oracle::opt_over;
use crate::valuations::{Instance, ValuationOracle};

/// Slack on the per-trial `welfare <= OPT` check.
pub const UPPER_BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub welfare: f64,
    pub revenue: f64,
    pub queries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareEstimate {
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub opt: f64,
    /// `mean / opt`, or 1 when OPT is 0.
    pub ratio: f64,
    pub mean_queries: f64,
    pub max_queries: usize,
    /// Trials whose welfare exceeded OPT.
    pub upper_bound_violations: Vec<u64>,
}

/// Runs `trials` executions with seeds `seed, seed+1, ...`. The result is in
/// trial order whatever the thread schedule.
pub fn simulate(
    oracles: &[ValuationOracle],
    m: usize,
    mechanism: &MechanismConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    mechanism.validate(m)?;
    let bidders = Bidders::new(oracles, m)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = seed.wrapping_add(t);
            let out = mechanism.run(&bidders, seed)?;
            Ok(TrialRecord {
                seed,
                welfare: out.welfare(),
                revenue: out.revenue(),
                queries: out.queries(),
            })
        })
        .collect()
}

pub fn monte_carlo_welfare(
    instance: &Instance,
    mechanism: &MechanismConfig,
    trials: usize,
    seed: u64,
) -> Result<WelfareEstimate> {
    let oracles = instance.oracles()?;
    let opt = opt_over(&oracles, instance.num_items())?.welfare;
    let records = simulate(&oracles, instance.num_items(), mechanism, trials, seed)?;
    Ok(summarize(&records, opt))
}

pub(crate) fn summarize(records: &[TrialRecord], opt: f64) -> WelfareEstimate {
    let k = records.len();
    let (mean, stderr) = mean_stderr(records.iter().map(|r| r.welfare));
    let mean_queries = if k == 0 {
        0.0
    } else {
        records.iter().map(|r| r.queries as f64).sum::<f64>() / k as f64
    };
    WelfareEstimate {
        trials: k,
        mean,
        stderr,
        opt,
        ratio: if opt > 0.0 { mean / opt } else { 1.0 },
        mean_queries,
        max_queries: records.iter().map(|r| r.queries).max().unwrap_or(0),
        upper_bound_violations: records
            .iter()
            .filter(|r| r.welfare > opt + UPPER_BOUND_TOLERANCE)
            .map(|r| r.seed)
            .collect(),
    }
}

fn mean_stderr(xs: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let k = xs.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}
