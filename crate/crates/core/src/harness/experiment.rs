use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::montecarlo::{simulate, summarize, WelfareEstimate};
use super::run::{MechanismConfig, PsiPolicy};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismKind;
use crate::oracle::opt_over;
use crate::rng::derive_seed;
use crate::valuations::{generate_instance, GeneratorSpec, Instance, PriceVector};

/// Instances come from `generator` (`instances` draws) or from `corpus`
/// files, never both. Corpus paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default = "one")]
    pub instances: usize,
    #[serde(default)]
    pub corpus: Vec<PathBuf>,
    pub mechanism: MechanismKind,
    #[serde(default)]
    pub psi: Option<PsiPolicy>,
    #[serde(default)]
    pub fixed_prices: Option<PriceVector>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::input(format!(
                "experiment config at `{}`: {}",
                e.path(),
                e.inner()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        match (&self.generator, self.corpus.is_empty()) {
            (Some(_), false) => Err(Error::input(
                "give either `generator` or `corpus`, not both",
            )),
            (None, true) => Err(Error::input("one of `generator` or `corpus` is required")),
            (Some(_), true) if self.instances == 0 => {
                Err(Error::input("instances must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn mechanism_config(&self) -> MechanismConfig {
        let mut mech = MechanismConfig::new(self.mechanism);
        if let Some(psi) = self.psi {
            mech = mech.with_psi(psi);
        }
        if let Some(p) = &self.fixed_prices {
            mech = mech.with_prices(p.clone());
        }
        mech
    }

    /// The instances with their ids, in report order.
    pub fn load_instances(&self, base_dir: &Path) -> Result<Vec<(String, Instance)>> {
        if let Some(spec) = &self.generator {
            return (0..self.instances)
                .map(|j| {
                    let inst = generate_instance(spec, self.seed.wrapping_add(j as u64))?;
                    Ok((format!("gen-{j:03}"), inst))
                })
                .collect();
        }
        self.corpus
            .iter()
            .map(|p| {
                let path = base_dir.join(p);
                let bytes = fs::read(&path)
                    .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
                let inst = Instance::from_json(&bytes)
                    .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
                let id = p
                    .file_stem()
                    .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into());
                Ok((id, inst))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub n: usize,
    pub m: usize,
    pub kind: String,
    pub seed: u64,
    pub estimate: WelfareEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl RatioSummary {
    fn of(ratios: &[f64]) -> Self {
        if ratios.is_empty() {
            return RatioSummary {
                min: 0.0,
                median: 0.0,
                mean: 0.0,
                max: 0.0,
            };
        }
        let mut v = ratios.to_vec();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 {
            v[k / 2]
        } else {
            (v[k / 2 - 1] + v[k / 2]) / 2.0
        };
        RatioSummary {
            min: v[0],
            median,
            mean: v.iter().sum::<f64>() / k as f64,
            max: v[k - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mechanism: MechanismKind,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub ratio_summary: RatioSummary,
    /// Trials, over all rows, whose welfare exceeded OPT.
    pub upper_bound_violations: usize,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    instance_id: &'a str,
    n: usize,
    m: usize,
    kind: &'a str,
    opt_welfare: f64,
    mean_welfare: f64,
    stderr: f64,
    ratio: f64,
    mean_queries: f64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                instance_id: &r.instance_id,
                n: r.n,
                m: r.m,
                kind: &r.kind,
                opt_welfare: r.estimate.opt,
                mean_welfare: r.estimate.mean,
                stderr: r.estimate.stderr,
                ratio: r.estimate.ratio,
                mean_queries: r.estimate.mean_queries,
            })
            .expect("writing to memory");
        }
        if self.rows.is_empty() {
            w.write_record([
                "instance_id",
                "n",
                "m",
                "kind",
                "opt_welfare",
                "mean_welfare",
                "stderr",
                "ratio",
                "mean_queries",
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

fn kind_label(inst: &Instance) -> String {
    let mut kinds = inst.bidders().iter().map(|b| b.kind());
    match kinds.next() {
        None => "none".into(),
        Some(k) if kinds.all(|o| o == k) => k.to_string(),
        Some(_) => "mixed".into(),
    }
}

/// Runs the experiment. Instance `j` uses trial seeds `s_j, s_j+1, ...`
/// with `s_j` derived from the config seed and `j`.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    let mech = config.mechanism_config();
    let mut rows = Vec::new();
    for (j, (id, inst)) in config.load_instances(base_dir)?.into_iter().enumerate() {
        let oracles = inst.oracles()?;
        let m = inst.num_items();
        let opt = opt_over(&oracles, m)?.welfare;
        let seed = derive_seed(config.seed, j as u64);
        let records = simulate(&oracles, m, &mech, config.trials, seed)?;
        rows.push(ReportRow {
            instance_id: id,
            n: inst.num_bidders(),
            m,
            kind: kind_label(&inst),
            seed,
            estimate: summarize(&records, opt),
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.estimate.ratio).collect();
    Ok(ExperimentReport {
        mechanism: config.mechanism,
        trials: config.trials,
        seed: config.seed,
        upper_bound_violations: rows
            .iter()
            .map(|r| r.estimate.upper_bound_violations.len())
            .sum(),
        ratio_summary: RatioSummary::of(&ratios),
        rows,
    })
}
