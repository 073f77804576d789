use std::ops::Range;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, ConfusionMatrix, MetricsReport};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::ingest::UserStore;
use crate::model::{train_on_vectors, validate_threshold, Label, DEFAULT_THRESHOLD, MIN_TRAINING_RECORDS};
use crate::schema::{build_schema, extract_features, system_label, FeatureSchema, SYSTEM_IDS};
use crate::seed::{derive_seed, stream_rng};
use crate::FeatureVector64;

/// Settings for the per-user train/test comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub systems: Vec<u8>,
    pub runs: usize,
    /// Own records held out per user (positive class).
    pub test_self: usize,
    /// Records drawn from other users (negative class).
    pub test_other: usize,
    pub threshold: f64,
    /// Forest settings; `seed` is replaced by a per-trial derived seed.
    pub forest: ForestParams,
    pub seed: u64,
    /// Inclusive record-count band selecting the users to model.
    pub band: (usize, usize),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            systems: SYSTEM_IDS.to_vec(),
            runs: 10,
            test_self: 100,
            test_other: 100,
            threshold: DEFAULT_THRESHOLD,
            forest: ForestParams::default(),
            seed: 42,
            band: (501, 600),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 || self.test_self < 1 || self.test_other < 1 {
            return Err(Error::invalid("runs, test_self and test_other must be at least 1"));
        }
        if self.systems.is_empty() {
            return Err(Error::invalid("no systems selected"));
        }
        for &s in &self.systems {
            build_schema(s)?;
        }
        if self.band.0 > self.band.1 {
            return Err(Error::InvalidRange {
                lo: self.band.0,
                hi: self.band.1,
            });
        }
        validate_threshold(self.threshold)?;
        self.forest.validate()
    }

    /// Seed for run `run`; shared by every system so splits line up.
    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, "run", run as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordClass {
    Own,
    Foreign,
}

impl ConfusionMatrix {
    /// Adds one verdict on a test record of `class`.
    pub fn count(&mut self, class: RecordClass, label: Label) {
        match (class, label) {
            (RecordClass::Own, Label::Normal) => self.tp += 1,
            (RecordClass::Own, Label::Anomalous) => self.fn_ += 1,
            (RecordClass::Foreign, Label::Anomalous) => self.tn += 1,
            (RecordClass::Foreign, Label::Normal) => self.fp += 1,
        }
    }
}

/// One scored test record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub user: String,
    /// `<owner>#<position in owner's time-ordered records>`.
    pub record_ref: String,
    pub score: f64,
    pub label: Label,
    pub class: RecordClass,
}

/// Result of one user's trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub user: String,
    pub matrix: ConfusionMatrix,
    pub verdicts: Vec<VerdictRow>,
}

impl TrialOutcome {
    /// Own test records flagged anomalous.
    pub fn own_anomalies(&self) -> u64 {
        self.matrix.fn_
    }
}

/// A store encoded under one schema. Records that fail extraction are
/// excluded from both training and the foreign pool.
pub struct EncodedCorpus<'a> {
    schema: FeatureSchema,
    users: Vec<(&'a str, Range<usize>)>,
    vectors: Vec<Option<FeatureVector64>>,
    usable: Vec<usize>,
    usable_ranges: Vec<Range<usize>>,
}

impl<'a> EncodedCorpus<'a> {
    pub fn new(store: &'a UserStore, schema: &FeatureSchema) -> Self {
        let mut users = Vec::with_capacity(store.user_count());
        let mut flat = Vec::with_capacity(store.total_record_count());
        for (id, records) in store.users() {
            let start = flat.len();
            flat.extend(records.iter());
            users.push((id, start..flat.len()));
        }
        let vectors: Vec<Option<FeatureVector64>> = flat
            .par_iter()
            .map(|r| extract_features(schema, r).ok())
            .collect();
        let usable: Vec<usize> = (0..vectors.len()).filter(|&i| vectors[i].is_some()).collect();
        let usable_ranges = users
            .iter()
            .map(|(_, r)| {
                let lo = usable.partition_point(|&i| i < r.start);
                let hi = usable.partition_point(|&i| i < r.end);
                lo..hi
            })
            .collect();
        EncodedCorpus {
            schema: schema.clone(),
            users,
            vectors,
            usable,
            usable_ranges,
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn unusable_count(&self) -> usize {
        self.vectors.len() - self.usable.len()
    }

    fn user_slot(&self, user: &str) -> Option<usize> {
        self.users.binary_search_by(|(id, _)| (*id).cmp(user)).ok()
    }

    fn record_ref(&self, global: usize) -> String {
        let slot = self.users.partition_point(|(_, r)| r.end <= global);
        let (owner, range) = &self.users[slot];
        format!("{owner}#{}", global - range.start)
    }

    fn vector(&self, global: usize) -> &[f64] {
        self.vectors[global].as_ref().expect("usable record").as_slice()
    }

    /// Runs one user's trial under `run_seed`.
    pub fn run_user_trial(
        &self,
        user: &str,
        config: &ExperimentConfig,
        run_seed: u64,
    ) -> Result<TrialOutcome> {
        let slot = self
            .user_slot(user)
            .ok_or_else(|| Error::UnknownUser(user.to_owned()))?;
        let own_range = self.usable_ranges[slot].clone();
        let own: &[usize] = &self.usable[own_range.clone()];
        let needed = config.test_self + MIN_TRAINING_RECORDS;
        if own.len() < needed {
            return Err(Error::InsufficientData {
                context: format!("own records of {user}"),
                needed,
                found: own.len(),
            });
        }
        let pool = self.usable.len() - own.len();
        if pool < config.test_other {
            return Err(Error::InsufficientData {
                context: format!("foreign records for {user}"),
                needed: config.test_other,
                found: pool,
            });
        }

        let mut rng = stream_rng(derive_seed(run_seed, user, 0), 0);
        let mut is_test = vec![false; own.len()];
        for i in index::sample(&mut rng, own.len(), config.test_self) {
            is_test[i] = true;
        }
        let mut train = Vec::with_capacity(own.len() - config.test_self);
        let mut own_test = Vec::with_capacity(config.test_self);
        for (k, &g) in own.iter().enumerate() {
            if is_test[k] {
                own_test.push(g);
            } else {
                train.push(self.vector(g));
            }
        }
        let foreign: Vec<usize> = index::sample(&mut rng, pool, config.test_other)
            .into_iter()
            .map(|j| {
                if j < own_range.start {
                    self.usable[j]
                } else {
                    self.usable[j + own.len()]
                }
            })
            .collect();

        let params = config.forest.with_seed(derive_seed(run_seed, user, 1));
        let model = train_on_vectors(user, &train, &self.schema, &params, config.threshold)?;

        let mut matrix = ConfusionMatrix::default();
        let mut verdicts = Vec::with_capacity(own_test.len() + foreign.len());
        let tests = own_test
            .iter()
            .map(|&g| (g, RecordClass::Own))
            .chain(foreign.iter().map(|&g| (g, RecordClass::Foreign)));
        for (g, class) in tests {
            let v = model.classify_vector(self.vector(g))?;
            matrix.count(class, v.label);
            verdicts.push(VerdictRow {
                user: user.to_owned(),
                record_ref: self.record_ref(g),
                score: v.score.value(),
                label: v.label,
                class,
            });
        }
        Ok(TrialOutcome {
            user: user.to_owned(),
            matrix,
            verdicts,
        })
    }
}

/// Runs one user's trial for `system_id`.
///
/// Prefer [`EncodedCorpus::run_user_trial`] when running many trials against
/// the same store, since this encodes the whole store on every call.
pub fn run_user_trial(
    user: &str,
    store: &UserStore,
    system_id: u8,
    config: &ExperimentConfig,
    run_seed: u64,
) -> Result<TrialOutcome> {
    let schema = build_schema(system_id)?;
    EncodedCorpus::new(store, &schema).run_user_trial(user, config, run_seed)
}

/// Users skipped in a run, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTrial {
    pub user: String,
    pub reason: String,
}

/// Per-run aggregate for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    /// Mean over users of each metric, skipping users where it is undefined.
    pub metrics: MetricsReport,
    /// Users excluded from each metric's mean (in [`super::METRIC_NAMES`] order).
    pub exclusions: [usize; 5],
    pub users_evaluated: usize,
    pub skipped: Vec<SkippedTrial>,
    /// Own-record anomaly count per evaluated user, in user order.
    pub own_anomaly_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResult {
    pub system_id: u8,
    pub label: String,
    /// Mean over runs of the per-run means.
    pub metrics: MetricsReport,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub users: Vec<String>,
    pub systems: Vec<SystemResult>,
}

/// Mean of the defined values; `None` when there are none. Values are
/// summed in ascending order, so the result does not depend on input order.
fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let mut defined = Vec::new();
    let mut excluded = 0usize;
    for v in values {
        match v {
            Some(x) => defined.push(x),
            None => excluded += 1,
        }
    }
    defined.sort_by(f64::total_cmp);
    let n = defined.len();
    ((n > 0).then(|| defined.iter().sum::<f64>() / n as f64), excluded)
}

/// Averages per-user metrics, skipping undefined values. Also returns how
/// many users were excluded per metric.
pub fn average_metrics(per_user: &[MetricsReport]) -> (MetricsReport, [usize; 5]) {
    let mut out = [None; 5];
    let mut excl = [0; 5];
    for k in 0..5 {
        let (m, e) = mean_defined(per_user.iter().map(|r| r.values()[k]));
        out[k] = m;
        excl[k] = e;
    }
    (MetricsReport::from_values(out), excl)
}

/// Runs the full comparison and reports every trial to `on_trial` in
/// deterministic `(system, run, user)` order.
///
/// Users inside `config.band` are modelled; foreign test records come from
/// the whole store. Per-user metrics are averaged over users within a run,
/// then over runs.
pub fn run_experiment_with<F>(
    store: &UserStore,
    config: &ExperimentConfig,
    mut on_trial: F,
) -> Result<ExperimentReport>
where
    F: FnMut(u8, usize, &TrialOutcome),
{
    config.validate()?;
    if store.is_empty() {
        return Err(Error::invalid("empty user store"));
    }
    let users = store.select_users_by_frequency(config.band.0, config.band.1)?;
    let mut systems = Vec::with_capacity(config.systems.len());
    for &system_id in &config.systems {
        let schema = build_schema(system_id)?;
        let corpus = EncodedCorpus::new(store, &schema);
        let mut runs = Vec::with_capacity(config.runs);
        for run in 0..config.runs {
            let run_seed = config.run_seed(run);
            let outcomes: Vec<Result<TrialOutcome>> = users
                .par_iter()
                .map(|u| corpus.run_user_trial(u, config, run_seed))
                .collect();
            let mut per_user = Vec::new();
            let mut skipped = Vec::new();
            let mut counts = Vec::new();
            for (user, outcome) in users.iter().zip(outcomes) {
                match outcome {
                    Ok(t) => {
                        on_trial(system_id, run, &t);
                        per_user.push(compute_metrics(&t.matrix));
                        counts.push(t.own_anomalies());
                    }
                    Err(e) => skipped.push(SkippedTrial {
                        user: user.clone(),
                        reason: e.to_string(),
                    }),
                }
            }
            let (metrics, exclusions) = average_metrics(&per_user);
            runs.push(RunSummary {
                run,
                metrics,
                exclusions,
                users_evaluated: per_user.len(),
                skipped,
                own_anomaly_counts: counts,
            });
        }
        let run_metrics: Vec<MetricsReport> = runs.iter().map(|r| r.metrics).collect();
        systems.push(SystemResult {
            system_id,
            label: system_label(system_id).to_owned(),
            metrics: average_metrics(&run_metrics).0,
            runs,
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        users,
        systems,
    })
}

pub fn run_experiment(store: &UserStore, config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(store, config, |_, _, _| {})
}
