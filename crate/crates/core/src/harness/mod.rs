//! Experiment driver: configuration, single trials, sweeps, the privacy
//! game and report generation.

mod config;
mod privacy;
mod report;
mod sweep;
mod trial;

use thiserror::Error;

pub use config::{ms, ExperimentSpec, SweepSpec};
pub use privacy::{expiry_horizon, privacy_game, PrivacyOutcome};
pub use report::{best_points, read_sweep, render_table, ReportRow};
pub use sweep::{
    emit_csv, hit_miss_rtts, simulate_sweep, sweep, trial_seed, write_csv, CsvRecord, RttIndexRow,
    SweepResult, SweepRow,
};
pub use trial::{
    decode_trial, multi_recipient_cpc, probe_write_errors, reread_trial, resolve_erasures, run_trial,
    simulate_trial, simulate_trial_traced, trial_codebook, TrialPoint, Reread, TrialReport, TrialTrace, WriteProbe,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    /// The schedule cannot work as configured, e.g. reads after expiry.
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("state compared at {compare_at_ms:.3} ms, before everything expires at {required_ms:.3} ms")]
    NotExpired { compare_at_ms: f64, required_ms: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Constraint(_) => 2,
            _ => 1,
        }
    }
}
