//! Acceptance criteria. Prints one line per criterion and exits non-zero if
//! any fails. Thresholds and tolerances are the constants below.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use pricelearn::auction::{fixed_price_auction, Bidders};
use pricelearn::harness::{
    monte_carlo_welfare, pinned_transcripts, run_experiment, truthfulness_suite, ExperimentConfig,
    MechanismConfig, TruthConfig,
};
use pricelearn::mechanisms::{binary_search_mechanism, MechanismKind};
use pricelearn::oracle::{brute_force_opt, naive_opt};
use pricelearn::valuations::{
    generate_instance, GeneratorKind, GeneratorSpec, Instance, PriceVector,
};
use pricelearn::ItemSet;

const IDENTITY_TOLERANCE: f64 = 1e-12;
const TRUTH_TOLERANCE: f64 = 1e-9;
const UPPER_BOUND_TOLERANCE: f64 = 1e-9;
const CALIBRATION_SIGMAS: f64 = 3.0;
const CALIBRATION_TRIALS: usize = 10_000;
const CALIBRATION_SEED: u64 = 1;

const FPA_RUNS: usize = 1_000;
const DEMAND_PRICE_VECTORS: usize = 500;
const SEARCH_RUNS: u64 = 500;
const TRUTH_INSTANCES: u64 = 200;
const TRUTH_COINS: u64 = 20;
const OPT_INSTANCES: u64 = 200;

const LIMIT_IDENTITY: Duration = Duration::from_secs(10);
const LIMIT_DEMAND: Duration = Duration::from_secs(5);
const LIMIT_SEARCH: Duration = Duration::from_secs(20);
const LIMIT_TRUTH: Duration = Duration::from_secs(300);
const LIMIT_OPT: Duration = Duration::from_secs(30);
const LIMIT_CALIBRATION: Duration = Duration::from_secs(600);

const KINDS: [GeneratorKind; 7] = [
    GeneratorKind::Additive,
    GeneratorKind::UnitDemand,
    GeneratorKind::Xos,
    GeneratorKind::BudgetAdditive,
    GeneratorKind::Coverage,
    GeneratorKind::SymmetricConcave,
    GeneratorKind::ExplicitSubadditive,
];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(limit: Duration, elapsed: Duration) -> (bool, String) {
    (
        elapsed <= limit,
        format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize, k: usize) -> Instance {
    let kind = KINDS[k % KINDS.len()];
    let mut spec = GeneratorSpec::new(kind, rng.gen_range(1..=max_n), rng.gen_range(1..=max_m), 16);
    spec.unit_log2 = rng.gen_range(-3..=0);
    generate_instance(&spec, rng.gen()).expect("generator accepts the spec")
}

fn random_prices(rng: &mut ChaCha8Rng, m: usize) -> PriceVector {
    PriceVector::new(
        (0..m)
            .map(|_| rng.gen_range(0..=24u32) as f64 / 4.0)
            .collect(),
    )
    .unwrap()
}

fn welfare_identity() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut bad = 0;
    for k in 0..FPA_RUNS {
        let inst = random_instance(&mut rng, 6, 8, k);
        let oracles = inst.oracles().unwrap();
        let m = inst.num_items();
        let bidders = Bidders::new(&oracles, m).unwrap();
        let mut order: Vec<usize> = (0..inst.num_bidders()).collect();
        order.shuffle(&mut rng);
        let prices = random_prices(&mut rng, m);
        let r = fixed_price_auction(&bidders, &order, ItemSet::full(m), &prices).unwrap();
        let welfare: f64 = (0..inst.num_bidders())
            .map(|i| inst.bidders()[i].value(r.allocation.bundle(i)))
            .sum();
        let revenue: f64 = r.revenue_by_item.iter().sum();
        let err = (r.utilities.iter().sum::<f64>() + revenue - welfare).abs();
        worst = worst.max(err);
        if err > IDENTITY_TOLERANCE {
            bad += 1;
        }
    }
    let (fast, time) = within(LIMIT_IDENTITY, start.elapsed());
    verdict(
        bad == 0 && fast,
        format!("{FPA_RUNS} FPAs, {bad} off by more than {IDENTITY_TOLERANCE:e}, max error {worst:e}, {time}"),
    )
}

fn demand_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    for kind in [GeneratorKind::Additive, GeneratorKind::UnitDemand] {
        for _ in 0..DEMAND_PRICE_VECTORS {
            let m = rng.gen_range(1..=6);
            let mut spec = GeneratorSpec::new(kind, 1, m, 12);
            spec.unit_log2 = -1;
            let inst = generate_instance(&spec, rng.gen()).unwrap();
            let o = &inst.oracles().unwrap()[0];
            let prices = random_prices(&mut rng, m);
            let avail = ItemSet::from_bits(rng.gen_range(0..1u32 << m));
            let fast = o.demand_query(&prices, avail).unwrap();
            let slow = o.exhaustive_demand(&prices, avail).unwrap();
            if o.utility(&prices, fast) != o.utility(&prices, slow) || fast != slow {
                mismatches += 1;
            }
        }
    }
    let (fast, time) = within(LIMIT_DEMAND, start.elapsed());
    verdict(
        mismatches == 0 && fast,
        format!("2 x {DEMAND_PRICE_VECTORS} price vectors, {mismatches} mismatches, {time}"),
    )
}

/// Candidate prices recomputed from their definition.
fn expected_candidates(psi: f64, m: usize) -> Vec<f64> {
    let log = (m.max(2) as f64).log2().ceil() as usize;
    let size = (3 * log + 1).next_power_of_two();
    let mut b = vec![0.0];
    b.extend((1..size).rev().map(|j| psi / (1u64 << j) as f64));
    b
}

fn search_structure() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut problems: Vec<String> = Vec::new();
    let mut rounds_seen = 0;
    for seed in 0..SEARCH_RUNS {
        let inst = random_instance(&mut rng, 6, 8, seed as usize);
        let (n, m) = (inst.num_bidders(), inst.num_items());
        let oracles = inst.oracles().unwrap();
        let bidders = Bidders::new(&oracles, m).unwrap();
        let psi = inst
            .bidders()
            .iter()
            .map(|v| v.value(ItemSet::full(m)))
            .fold(0.0, f64::max);
        if psi == 0.0 {
            continue;
        }
        let out = binary_search_mechanism(&bidders, ItemSet::full(m), psi, seed).unwrap();
        let t = &out.transcript;
        let b = expected_candidates(psi, m);
        let beta = b.len().trailing_zeros();
        let mut fail = |what: String| problems.push(format!("seed {seed}: {what}"));
        if t.candidate_prices != b {
            fail(format!("B = {:?}, expected {b:?}", t.candidate_prices));
            continue;
        }
        let coins = t.search_coins.as_ref().unwrap();
        if t.rounds.len() != coins.final_round as usize {
            fail(format!(
                "{} rounds executed, r* = {}",
                t.rounds.len(),
                coins.final_round
            ));
        }
        if out.queries() > n {
            fail(format!("{} queries for {n} bidders", out.queries()));
        }
        let mut ladder: Vec<Vec<f64>> = vec![b.clone(); m];
        for r in &t.rounds {
            rounds_seen += 1;
            for e in 0..m {
                let mid = ladder[e][ladder[e].len() / 2];
                let p = r.prices.get(e);
                if p != mid || !b.contains(&p) {
                    fail(format!(
                        "round {}: item {e} priced {p}, ladder midpoint {mid}",
                        r.round
                    ));
                }
            }
            if r.round > beta {
                continue;
            }
            let want = b.len() >> r.round;
            for (e, slot) in ladder.iter_mut().enumerate() {
                let after = &r.ladder_after[e];
                let p = r.prices.get(e);
                if after.len() != want {
                    fail(format!(
                        "round {}: item {e} ladder has {} entries, expected {want}",
                        r.round,
                        after.len()
                    ));
                    continue;
                }
                let ok = if r.result.sold.contains(e) {
                    after[0] == p
                } else {
                    after[want - 1] < p
                };
                if !ok || after.iter().any(|x| !slot.contains(x)) {
                    fail(format!("round {}: item {e} at {p} kept {after:?}", r.round));
                }
                *slot = after.clone();
            }
        }
        let last = t.rounds.last().unwrap();
        for i in 0..n {
            if out.payments()[i] != 0.0 && !last.participants.contains(&i) {
                fail(format!("bidder {i} charged outside the final round"));
            }
        }
    }
    let (fast, time) = within(LIMIT_SEARCH, start.elapsed());
    let first = problems.first().cloned().unwrap_or_default();
    verdict(
        problems.is_empty() && fast,
        format!(
            "{SEARCH_RUNS} runs, {rounds_seen} rounds, {} problems{}{}, {time}",
            problems.len(),
            if first.is_empty() { "" } else { ": " },
            first
        ),
    )
}

fn truthfulness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let cfg = TruthConfig {
        tolerance: TRUTH_TOLERANCE,
        ..TruthConfig::default()
    };
    let (mut tried, mut violations) = (0, Vec::new());
    for k in 0..TRUTH_INSTANCES {
        let inst = random_instance(&mut rng, 4, 5, k as usize);
        let oracles = inst.oracles().unwrap();
        for kind in [MechanismKind::Final, MechanismKind::BinarySearch] {
            let coins = (0..TRUTH_COINS).map(|s| k * 1000 + s);
            let ts = pinned_transcripts(
                &oracles,
                inst.num_items(),
                &MechanismConfig::new(kind),
                coins,
            )
            .unwrap();
            let r = truthfulness_suite(&oracles, &ts, &cfg).unwrap();
            tried += r.deviations_tried;
            violations.extend(r.violations);
        }
    }
    let (fast, time) = within(LIMIT_TRUTH, start.elapsed());
    verdict(
        violations.is_empty() && fast && tried > 0,
        format!(
            "{TRUTH_INSTANCES} instances x {TRUTH_COINS} coins x 2 mechanisms, {tried} deviations, {} profitable, {time}",
            violations.len()
        ),
    )
}

fn oracle_cross_check() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut mismatches = 0;
    for k in 0..OPT_INSTANCES {
        let inst = random_instance(&mut rng, 3, 5, k as usize);
        if brute_force_opt(&inst).unwrap().welfare != naive_opt(&inst).unwrap().welfare {
            mismatches += 1;
        }
    }
    let (fast, time) = within(LIMIT_OPT, start.elapsed());
    verdict(
        mismatches == 0 && fast,
        format!("{OPT_INSTANCES} instances, {mismatches} mismatches, {time}"),
    )
}

#[derive(Deserialize)]
struct Golden {
    entries: Vec<GoldenEntry>,
}

#[derive(Deserialize)]
struct GoldenEntry {
    instance_id: String,
    opt_welfare: f64,
    ratio: f64,
}

fn calibration_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/calibration")
}

/// Returns the verdict and the number of trials above OPT.
fn calibration() -> (Verdict, usize, usize) {
    let start = Instant::now();
    let dir = calibration_dir();
    let golden: Golden =
        serde_json::from_slice(&fs::read(dir.join("golden.json")).unwrap()).unwrap();
    let mech = MechanismConfig::new(MechanismKind::Final);
    let (mut worst, mut worst_id, mut misses, mut above, mut trials) =
        (0.0f64, String::new(), 0, 0, 0);
    for (idx, g) in golden.entries.iter().enumerate() {
        // disjoint seed ranges keep the per-instance comparisons independent
        let seed = CALIBRATION_SEED + (idx * CALIBRATION_TRIALS) as u64;
        let bytes = fs::read(
            dir.join("instances")
                .join(format!("{}.json", g.instance_id)),
        )
        .unwrap();
        let inst = Instance::from_json(&bytes).unwrap();
        let est = monte_carlo_welfare(&inst, &mech, CALIBRATION_TRIALS, seed).unwrap();
        assert_eq!(
            est.opt, g.opt_welfare,
            "{}: OPT disagrees with the reference",
            g.instance_id
        );
        let z = (est.ratio - g.ratio).abs() / (est.stderr / est.opt);
        if z > worst {
            worst = z;
            worst_id = g.instance_id.clone();
        }
        if z > CALIBRATION_SIGMAS {
            misses += 1;
        }
        above += est.upper_bound_violations.len();
        trials += est.trials;
    }
    let (fast, time) = within(LIMIT_CALIBRATION, start.elapsed());
    let v = verdict(
        misses == 0 && fast,
        format!(
            "{} instances x {CALIBRATION_TRIALS} trials, {misses} outside {CALIBRATION_SIGMAS} stderr, worst {worst:.2} ({worst_id}), {time}",
            golden.entries.len()
        ),
    );
    (v, above, trials)
}

fn upper_bound(calibration_above: usize, calibration_trials: usize) -> Verdict {
    let mut above = calibration_above;
    let mut trials = calibration_trials;
    for (k, kind) in KINDS.iter().enumerate() {
        for mech in [
            MechanismKind::FpaFixed,
            MechanismKind::BinarySearch,
            MechanismKind::Final,
        ] {
            let cfg = ExperimentConfig {
                generator: Some(GeneratorSpec::new(*kind, 4, 6, 10)),
                instances: 3,
                corpus: vec![],
                mechanism: mech,
                psi: None,
                fixed_prices: None,
                trials: 300,
                seed: 600 + k as u64,
                output: None,
            };
            let r = run_experiment(&cfg, Path::new(".")).unwrap();
            above += r.upper_bound_violations;
            trials += r.rows.iter().map(|row| row.estimate.trials).sum::<usize>();
        }
    }
    verdict(
        above == 0,
        format!("{trials} trials, {above} above OPT + {UPPER_BOUND_TOLERANCE:e}"),
    )
}

fn cli(args: &[&str], cwd: &Path) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_pricelearn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (out.status.success(), out.stdout)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let inst = calibration_dir().join("instances/xos-03.json");
    let inst = inst.to_str().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for mech in ["fpa-fixed", "binary-search", "final"] {
        for seed in ["5", "6"] {
            let mut outputs = Vec::new();
            for run in 0..2 {
                let t = dir.join(format!("t-{mech}-{seed}-{run}.json"));
                let (ok, stdout) = cli(
                    &[
                        "run",
                        "--instance",
                        inst,
                        "--mechanism",
                        mech,
                        "--seed",
                        seed,
                        "--transcript",
                        t.to_str().unwrap(),
                    ],
                    dir,
                );
                outputs.push((ok, stdout, fs::read(&t).unwrap_or_default()));
            }
            compared += 1;
            if !outputs[0].0 || outputs[0] != outputs[1] {
                differing.push(format!("run {mech} seed {seed}"));
            }
        }
    }
    let cfg = serde_json::json!({
        "corpus": [inst],
        "generator": null,
        "mechanism": "final",
        "trials": 2000,
        "seed": 9
    });
    fs::write(dir.join("cfg.json"), cfg.to_string()).unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let csv = format!("report-{run}.csv");
        let json = format!("report-{run}.json");
        let (ok, stdout) = cli(
            &[
                "experiment",
                "--config",
                "cfg.json",
                "--out",
                &csv,
                "--json",
                &json,
            ],
            dir,
        );
        outputs.push((
            ok,
            stdout,
            fs::read(dir.join(&csv)).unwrap_or_default(),
            fs::read(dir.join(&json)).unwrap_or_default(),
        ));
    }
    compared += 1;
    if !outputs[0].0 || outputs[0] != outputs[1] {
        differing.push("experiment".into());
    }
    verdict(
        differing.is_empty(),
        format!(
            "{compared} command pairs, {} differ {differing:?}",
            differing.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: u32, name: &str, v: Verdict| {
        all &= v.pass;
        println!(
            "[PRIMARY] {n} {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    };
    report(1, "welfare identity", welfare_identity());
    report(2, "demand-oracle equivalence", demand_equivalence());
    report(3, "binary-search structure", search_structure());
    report(4, "universal truthfulness", truthfulness());
    report(5, "oracle cross-check", oracle_cross_check());
    let (cal, above, trials) = calibration();
    report(6, "per-trial upper bound", upper_bound(above, trials));
    report(7, "approximation-ratio calibration", cal);
    report(8, "determinism", determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
