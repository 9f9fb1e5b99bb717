mod experiment;
mod invariants;
mod montecarlo;
mod run;
mod truthfulness;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, RatioSummary, ReportRow};
pub use invariants::{
    check_transcript, invariant_suite, verify_instance, Check, Finding, InvariantFailure,
    InvariantReport, InvariantSuite, ValidatorFinding,
};
pub use montecarlo::{monte_carlo_welfare, simulate, TrialRecord, WelfareEstimate};
pub use run::{MechanismConfig, PsiPolicy};
pub use truthfulness::{
    pinned_transcripts, truthfulness_suite, TruthConfig, TruthReport, Violation,
};
