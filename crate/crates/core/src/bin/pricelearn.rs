use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pricelearn::auction::Bidders;
use pricelearn::harness::{
    pinned_transcripts, run_experiment, truthfulness_suite, verify_instance, ExperimentConfig,
    MechanismConfig, PsiPolicy, TruthConfig,
};
use pricelearn::hexfloat;
use pricelearn::mechanisms::{replay, MechanismKind, Outcome, Transcript};
use pricelearn::oracle::brute_force_opt;
use pricelearn::valuations::{generate_instance, GeneratorSpec, Instance, PriceVector};
use pricelearn::Error;

/// Posted-price combinatorial auctions: generate instances, run mechanisms,
/// check them.
#[derive(Parser)]
#[command(name = "pricelearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance from a generator spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal welfare and one optimal allocation.
    Opt {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run one mechanism once.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismKind,
        /// Required by every randomized mechanism.
        #[arg(long)]
        seed: Option<u64>,
        /// Scale for binary-search; defaults to the largest grand-bundle value.
        #[arg(long, value_parser = parse_number)]
        psi: Option<f64>,
        /// Comma-separated item prices for fpa-fixed; defaults to zeros.
        #[arg(long, value_delimiter = ',', value_parser = parse_number)]
        prices: Option<Vec<f64>>,
        /// Write the full transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Re-run a transcript and confirm it reproduces.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check every bidder for monotonicity and subadditivity.
    Verify {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Search for profitable deviations under pinned coins.
    Truthfulness {
        #[arg(long)]
        instance: PathBuf,
        /// Coin realizations, seeds 0..K.
        #[arg(long)]
        seeds: u64,
        /// Defaults to both binary-search (exact psi) and final.
        #[arg(long, value_enum)]
        mechanism: Option<MechanismKind>,
    },
    /// Monte Carlo welfare against OPT over many instances.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// CSV report; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Failure of a check, as opposed to an error.
struct Violation(String);

enum Failure {
    Error(Error),
    Violation(Violation),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type CmdResult = Result<String, Failure>;

fn parse_number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let x = if t.contains("0x") || t.contains("0X") {
        hexfloat::parse(t).map_err(|e| e.to_string())?
    } else {
        t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"))?
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{t:?} is not finite"))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Error> {
    Instance::from_json(&read(path)?).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn describe(out: &Outcome) -> String {
    let t = &out.transcript;
    let s = out.settlement();
    let mut text = String::new();
    let _ = writeln!(text, "mechanism {}", t.mechanism);
    if let Some(seed) = t.seed {
        let _ = writeln!(text, "seed {seed}");
    }
    let _ = writeln!(
        text,
        "source {}",
        serde_json::to_string(&s.source).expect("plain enum")
    );
    if let Some(psi) = t.psi {
        let _ = writeln!(text, "psi {psi}");
    }
    let _ = writeln!(text, "welfare {}", s.welfare);
    let _ = writeln!(text, "revenue {}", s.revenue);
    let _ = writeln!(text, "queries {}", s.queries);
    for i in 0..t.n {
        let _ = writeln!(
            text,
            "bidder {i}: {} pays {} utility {}",
            s.allocation.bundle(i),
            s.payments[i],
            s.utilities[i]
        );
    }
    text
}

fn show(out: &Outcome, json: bool) -> String {
    if json {
        with_newline(serde_json::to_string_pretty(out.settlement()).expect("settlement serializes"))
    } else {
        describe(out)
    }
}

fn gen(spec: &Path, seed: u64, out: Option<&Path>) -> CmdResult {
    let spec = GeneratorSpec::from_json(&read(spec)?).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", spec.display())),
        other => other,
    })?;
    let json = with_newline(generate_instance(&spec, seed)?.to_json());
    match out {
        Some(path) => {
            write(path, &json)?;
            Ok(String::new())
        }
        None => Ok(json),
    }
}

fn opt(instance: &Path, json: bool) -> CmdResult {
    let r = brute_force_opt(&load_instance(instance)?)?;
    if json {
        return Ok(with_newline(
            serde_json::to_string_pretty(&r).expect("serializes"),
        ));
    }
    let mut text = format!("welfare {}\n", r.welfare);
    for (i, b) in r.allocation.bundles().iter().enumerate() {
        let _ = writeln!(text, "bidder {i}: {b}");
    }
    Ok(text)
}

#[allow(clippy::too_many_arguments)]
fn run(
    instance: &Path,
    mechanism: MechanismKind,
    seed: Option<u64>,
    psi: Option<f64>,
    prices: Option<Vec<f64>>,
    transcript: Option<&Path>,
    json: bool,
) -> CmdResult {
    let inst = load_instance(instance)?;
    let mut mech = MechanismConfig::new(mechanism);
    if let Some(x) = psi {
        if mechanism != MechanismKind::BinarySearch {
            return Err(Error::Input("--psi applies to binary-search only".into()).into());
        }
        mech = mech.with_psi(PsiPolicy::Fixed(x));
    }
    if let Some(p) = prices {
        if mechanism != MechanismKind::FpaFixed {
            return Err(Error::Input("--prices applies to fpa-fixed only".into()).into());
        }
        mech = mech.with_prices(PriceVector::new(p)?);
    }
    let seed = match (mechanism, seed) {
        (MechanismKind::FpaFixed, s) => s.unwrap_or(0),
        (_, Some(s)) => s,
        (_, None) => {
            return Err(Error::Input(format!("{mechanism} is randomized and needs --seed")).into())
        }
    };
    let oracles = inst.oracles()?;
    let bidders = Bidders::new(&oracles, inst.num_items())?;
    let out = mech.run(&bidders, seed)?;
    if let Some(path) = transcript {
        write(path, &with_newline(out.transcript.to_json()))?;
    }
    Ok(show(&out, json))
}

fn replay_cmd(transcript: &Path, instance: &Path, json: bool) -> CmdResult {
    let t = Transcript::from_json(&read(transcript)?).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", transcript.display())),
        other => other,
    })?;
    let inst = load_instance(instance)?;
    let out = replay(&t, &inst.oracles()?, None)?;
    if out.transcript != t {
        return Err(Failure::Violation(Violation(format!(
            "replay diverges from the recorded transcript\n{}",
            describe(&out)
        ))));
    }
    Ok(show(&out, json))
}

fn verify(instance: &Path) -> CmdResult {
    let inst = load_instance(instance)?;
    let found = verify_instance(&inst)?;
    if found.is_empty() {
        return Ok(format!(
            "ok: {} bidders monotone and subadditive\n",
            inst.num_bidders()
        ));
    }
    let lines: Vec<String> = found.iter().map(ToString::to_string).collect();
    Err(Failure::Violation(Violation(lines.join("\n"))))
}

fn truthfulness(instance: &Path, seeds: u64, mechanism: Option<MechanismKind>) -> CmdResult {
    let inst = load_instance(instance)?;
    let oracles = inst.oracles()?;
    let kinds = match mechanism {
        Some(k) => vec![k],
        None => vec![MechanismKind::BinarySearch, MechanismKind::Final],
    };
    let mut text = String::new();
    let mut bad = Vec::new();
    for kind in kinds {
        let ts = pinned_transcripts(
            &oracles,
            inst.num_items(),
            &MechanismConfig::new(kind),
            0..seeds,
        )?;
        let r = truthfulness_suite(&oracles, &ts, &TruthConfig::default())?;
        let _ = writeln!(
            text,
            "{kind}: {} coin realizations, {} deviations tried, {} profitable",
            r.transcripts,
            r.deviations_tried,
            r.violations.len()
        );
        for v in r.violations {
            bad.push(format!(
                "{kind} seed {:?}: bidder {} gains {} -> {} with {}",
                v.seed,
                v.deviation.bidder,
                v.truthful_utility,
                v.deviant_utility,
                serde_json::to_string(&v.deviation.response).expect("serializes")
            ));
        }
    }
    if bad.is_empty() {
        Ok(text)
    } else {
        Err(Failure::Violation(Violation(format!(
            "{text}{}",
            bad.join("\n")
        ))))
    }
}

fn experiment(config: &Path, out: Option<&Path>, json: Option<&Path>) -> CmdResult {
    let cfg = ExperimentConfig::from_json(&read(config)?).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", config.display())),
        other => other,
    })?;
    let base = config.parent().unwrap_or(Path::new("."));
    let report = run_experiment(&cfg, base)?;
    let csv = report.to_csv();
    if let Some(path) = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(|p| base.join(p)))
    {
        write(&path, &csv)?;
    }
    if let Some(path) = json {
        write(path, &with_newline(report.to_json()))?;
    }
    let s = report.ratio_summary;
    let mut text = csv;
    let _ = writeln!(
        text,
        "ratio min {} median {} mean {} max {}; {} trials above OPT",
        s.min, s.median, s.mean, s.max, report.upper_bound_violations
    );
    if report.upper_bound_violations > 0 {
        return Err(Failure::Violation(Violation(text)));
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen { spec, seed, out } => gen(&spec, seed, out.as_deref()),
        Command::Opt { instance, json } => opt(&instance, json),
        Command::Run {
            instance,
            mechanism,
            seed,
            psi,
            prices,
            transcript,
            json,
        } => run(
            &instance,
            mechanism,
            seed,
            psi,
            prices,
            transcript.as_deref(),
            json,
        ),
        Command::Replay {
            transcript,
            instance,
            json,
        } => replay_cmd(&transcript, &instance, json),
        Command::Verify { instance } => verify(&instance),
        Command::Truthfulness {
            instance,
            seeds,
            mechanism,
        } => truthfulness(&instance, seeds, mechanism),
        Command::Experiment { config, out, json } => {
            experiment(&config, out.as_deref(), json.as_deref())
        }
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Violation(Violation(text))) => {
            eprintln!("{text}");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                Error::Capability(_) => 2,
                _ => 1,
            })
        }
    }
}
