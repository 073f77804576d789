//! The per-user evaluation protocol and its metrics.
//!
//! For each modelled user and run, `test_self` of the user's own records are
//! held out and `test_other` records are drawn from everyone else. The model
//! is trained on the remaining own records. Own records judged normal are
//! true positives; foreign records judged anomalous are true negatives.

mod experiment;
mod metrics;
mod report;

pub use experiment::{
    average_metrics, run_experiment, run_experiment_with, run_user_trial, EncodedCorpus,
    ExperimentConfig, ExperimentReport, RecordClass, RunSummary, SkippedTrial, SystemResult,
    TrialOutcome, VerdictRow,
};
pub use metrics::{
    anomalous_count_histogram, compute_metrics, ConfusionMatrix, MetricsReport, METRIC_NAMES,
};
pub use report::{histogram_csv, render_table, report_csv, write_verdicts, VERDICT_HEADER};

impl ExperimentReport {
    /// Own-record anomaly histogram of `run` for `system_id`.
    pub fn histogram(&self, system_id: u8, run: usize) -> Option<std::collections::BTreeMap<u64, usize>> {
        let sys = self.systems.iter().find(|s| s.system_id == system_id)?;
        let r = sys.runs.get(run)?;
        Some(anomalous_count_histogram(&r.own_anomaly_counts))
    }

    pub fn system(&self, system_id: u8) -> Option<&SystemResult> {
        self.systems.iter().find(|s| s.system_id == system_id)
    }
}
