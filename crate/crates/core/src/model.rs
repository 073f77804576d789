//! Per-user baseline models and threshold classification.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forest::{fit_forest, AnomalyScore, ForestParams};
use crate::ingest::LogRecord;
use crate::schema::{extract_features, FeatureSchema};
use crate::{FeatureVector64, Forest64};

pub const DEFAULT_THRESHOLD: f64 = 0.80;
pub const BUNDLE_FORMAT_VERSION: u32 = 1;
/// Fewest usable training records a model accepts.
pub const MIN_TRAINING_RECORDS: usize = 2;

const MODEL_FILE: &str = "model.json";
const SCHEMA_FILE: &str = "schema.json";
const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub score: AnomalyScore<f64>,
    pub label: Label,
}

/// Strictly above the threshold is anomalous; equality is normal.
pub fn label_for(score: f64, threshold: f64) -> Label {
    if score > threshold {
        Label::Anomalous
    } else {
        Label::Normal
    }
}

pub fn validate_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold {threshold} outside (0, 1)")))
    }
}

/// A user's baseline: a forest over their own records plus a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct UserModel {
    user_id: String,
    schema: FeatureSchema,
    forest: Forest64,
    threshold: f64,
    params: ForestParams,
    training_records: usize,
    skipped_training_records: usize,
}

/// Trains a baseline on `records`. Records that fail feature extraction are
/// skipped and counted.
pub fn train_user_model(
    user_id: &str,
    records: &[LogRecord],
    schema: &FeatureSchema,
    params: &ForestParams,
    threshold: f64,
) -> Result<UserModel> {
    let vectors: Vec<FeatureVector64> = records
        .iter()
        .filter_map(|r| extract_features(schema, r).ok())
        .collect();
    let skipped = records.len() - vectors.len();
    let mut model = train_on_vectors(user_id, &vectors, schema, params, threshold)?;
    model.skipped_training_records = skipped;
    Ok(model)
}

/// Trains a baseline on already-extracted vectors.
pub fn train_on_vectors<P: AsRef<[f64]> + Sync>(
    user_id: &str,
    vectors: &[P],
    schema: &FeatureSchema,
    params: &ForestParams,
    threshold: f64,
) -> Result<UserModel> {
    validate_threshold(threshold)?;
    if vectors.len() < MIN_TRAINING_RECORDS {
        return Err(Error::InsufficientData {
            context: format!("user {user_id}"),
            needed: MIN_TRAINING_RECORDS,
            found: vectors.len(),
        });
    }
    if let Some(v) = vectors.iter().find(|v| v.as_ref().len() != schema.len()) {
        return Err(Error::invalid(format!(
            "vector has {} dimensions, schema has {}",
            v.as_ref().len(),
            schema.len()
        )));
    }
    let forest = fit_forest(vectors, params)?;
    Ok(UserModel {
        user_id: user_id.to_owned(),
        schema: schema.clone(),
        forest,
        threshold,
        params: *params,
        training_records: vectors.len(),
        skipped_training_records: 0,
    })
}

/// Scores `record` against `model`.
pub fn classify(model: &UserModel, record: &LogRecord) -> Result<Verdict> {
    model.classify(record)
}

impl UserModel {
    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn forest(&self) -> &Forest64 {
        &self.forest
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn training_records(&self) -> usize {
        self.training_records
    }

    pub fn skipped_training_records(&self) -> usize {
        self.skipped_training_records
    }

    /// Same model with a different threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        validate_threshold(threshold)?;
        self.threshold = threshold;
        Ok(self)
    }

    pub fn classify(&self, record: &LogRecord) -> Result<Verdict> {
        let v: FeatureVector64 = extract_features(&self.schema, record)?;
        self.classify_vector(v.as_slice())
    }

    pub fn classify_vector(&self, point: &[f64]) -> Result<Verdict> {
        let score = self.forest.anomaly_score(point)?;
        Ok(Verdict {
            score,
            label: label_for(score.value(), self.threshold),
        })
    }

    fn documents(&self) -> Result<(String, String)> {
        Ok((self.forest.to_json()?, self.schema.to_json()?))
    }

    /// Writes `model.json`, `schema.json` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<BundleMeta> {
        fs::create_dir_all(dir).map_err(Error::at_path(dir))?;
        let (model_json, schema_json) = self.documents()?;
        let meta = BundleMeta {
            format_version: BUNDLE_FORMAT_VERSION,
            user_id: self.user_id.clone(),
            system_id: self.schema.system_id(),
            params: self.params,
            threshold: self.threshold,
            training_records: self.training_records,
            skipped_training_records: self.skipped_training_records,
            content_hash: content_hash(&model_json, &schema_json),
        };
        for (name, body) in [
            (MODEL_FILE, model_json),
            (SCHEMA_FILE, schema_json),
            (META_FILE, serde_json::to_string_pretty(&meta)?),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(Error::at_path(&path))?;
        }
        Ok(meta)
    }

    /// Loads a bundle written by [`UserModel::save`], verifying its hash.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(Error::at_path(&path))
        };
        let model_json = read(MODEL_FILE)?;
        let schema_json = read(SCHEMA_FILE)?;
        let meta: BundleMeta = serde_json::from_str(&read(META_FILE)?)?;
        if meta.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: meta.format_version,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        if meta.content_hash != content_hash(&model_json, &schema_json) {
            return Err(Error::DataQuality(format!(
                "{}: content hash mismatch",
                dir.display()
            )));
        }
        let forest = Forest64::from_json(&model_json)?;
        let schema = FeatureSchema::from_json(&schema_json)?;
        if forest.dimensions() != schema.len() || schema.system_id() != meta.system_id {
            return Err(Error::invalid("model and schema disagree"));
        }
        validate_threshold(meta.threshold)?;
        Ok(UserModel {
            user_id: meta.user_id,
            schema,
            forest,
            threshold: meta.threshold,
            params: meta.params,
            training_records: meta.training_records,
            skipped_training_records: meta.skipped_training_records,
        })
    }
}

/// Bundle metadata stored next to the model and schema documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub format_version: u32,
    pub user_id: String,
    pub system_id: u8,
    pub params: ForestParams,
    pub threshold: f64,
    pub training_records: usize,
    pub skipped_training_records: usize,
    /// SHA-256 over the model document followed by the schema document.
    pub content_hash: String,
}

impl BundleMeta {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(META_FILE);
        let text = fs::read_to_string(&path).map_err(Error::at_path(&path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn content_hash(model_json: &str, schema_json: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_json.as_bytes());
    h.update(schema_json.as_bytes());
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;
    use crate::schema::build_schema;

    fn rec(mr: &str, br: &str, hour: u8) -> LogRecord {
        let (timestamp, d, h) = parse_timestamp(&format!("03/03/2014 {hour:02}:00:00")).unwrap();
        LogRecord {
            user_id: "u".into(),
            timestamp,
            day_of_week: d,
            hour_of_day: h,
            match_rule: mr.into(),
            signature_check: "Y".into(),
            device_check: "YY".into(),
            browser: br.into(),
            consistency_violation: false,
            raw_fields: csv::StringRecord::new(),
        }
    }

    fn varied_records(n: usize) -> Vec<LogRecord> {
        (0..n)
            .map(|i| {
                let br = if i % 10 == 0 { "Firefox" } else { "Internet Explorer" };
                let mr = if i % 7 == 0 { "DEVICEIDCHECK" } else { "USERKNOWN" };
                rec(mr, br, (8 + i % 9) as u8)
            })
            .collect()
    }

    #[test]
    fn boundary_is_normal() {
        assert_eq!(label_for(0.80, 0.80), Label::Normal);
        assert_eq!(label_for(0.9307, 0.80), Label::Anomalous);
        assert_eq!(label_for(0.4118, 0.80), Label::Normal);
        assert_eq!(label_for(0.800_000_000_1, 0.80), Label::Anomalous);
    }

    #[test]
    fn threshold_validated() {
        assert!(validate_threshold(0.0).is_err());
        assert!(validate_threshold(1.0).is_err());
        assert!(validate_threshold(0.8).is_ok());
    }

    #[test]
    fn insufficient_data() {
        let schema = build_schema(6).unwrap();
        let err = train_user_model("u", &varied_records(1), &schema, &ForestParams::default(), 0.8)
            .unwrap_err();
        assert!(matches!(err, Error::InsufficientData { found: 1, .. }));
        // unusable records do not count
        let mut recs = varied_records(1);
        recs.push(rec("USERKNOWN", "UNKNOWN", 9));
        assert!(train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8).is_err());
    }

    #[test]
    fn skips_unusable_training_records() {
        let schema = build_schema(4).unwrap();
        let mut recs = varied_records(20);
        recs.push(rec("USERKNOWN", "UNKNOWN", 9));
        let m = train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8).unwrap();
        assert_eq!(m.training_records(), 20);
        assert_eq!(m.skipped_training_records(), 1);
    }

    #[test]
    fn classify_propagates_extraction_errors() {
        let schema = build_schema(4).unwrap();
        let m = train_user_model("u", &varied_records(50), &schema, &ForestParams::default(), 0.8)
            .unwrap();
        assert!(matches!(
            m.classify(&rec("USERKNOWN", "UNKNOWN", 9)),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn uniform_profile_scores_half() {
        let schema = build_schema(6).unwrap();
        let recs = vec![rec("USERKNOWN", "Chrome", 9); 300];
        let m = train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8).unwrap();
        for r in recs.iter().take(10) {
            let v = m.classify(r).unwrap();
            assert!((v.score.value() - 0.5).abs() < 1e-12);
            assert_eq!(v.label, Label::Normal);
        }
    }

    #[test]
    fn raising_threshold_never_flags_more() {
        let schema = build_schema(7).unwrap();
        let recs = varied_records(400);
        let m = train_user_model("u", &recs, &schema, &ForestParams::default(), 0.5).unwrap();
        let probe = [
            rec("USERVELOCITY", "Opera", 3),
            rec("USERKNOWN", "Internet Explorer", 10),
            rec("DEVICEIDCHECK", "Firefox", 16),
        ];
        for r in &probe {
            let mut was_normal = false;
            for t in [0.5, 0.6, 0.7, 0.8, 0.9, 0.99] {
                let v = m.clone().with_threshold(t).unwrap().classify(r).unwrap();
                if was_normal {
                    assert_eq!(v.label, Label::Normal);
                }
                was_normal |= v.label == Label::Normal;
            }
        }
    }

    #[test]
    fn bundle_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let schema = build_schema(7).unwrap();
        let recs = varied_records(300);
        let m = train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8).unwrap();
        let meta = m.save(dir.path()).unwrap();
        let back = UserModel::load(dir.path()).unwrap();
        assert_eq!(back, m);
        for r in &recs {
            assert_eq!(
                m.classify(r).unwrap().score.value().to_bits(),
                back.classify(r).unwrap().score.value().to_bits()
            );
        }
        // deterministic bytes
        let dir2 = tempfile::tempdir().unwrap();
        let m2 = train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8).unwrap();
        assert_eq!(m2.save(dir2.path()).unwrap().content_hash, meta.content_hash);
        for f in [MODEL_FILE, SCHEMA_FILE, META_FILE] {
            assert_eq!(
                fs::read(dir.path().join(f)).unwrap(),
                fs::read(dir2.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn tampered_bundle_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let schema = build_schema(4).unwrap();
        let m = train_user_model("u", &varied_records(50), &schema, &ForestParams::default(), 0.8)
            .unwrap();
        m.save(dir.path()).unwrap();
        let path = dir.path().join(MODEL_FILE);
        let text = fs::read_to_string(&path).unwrap().replacen("\"seed\":42", "\"seed\":43", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(UserModel::load(dir.path()), Err(Error::DataQuality(_))));
    }
}
