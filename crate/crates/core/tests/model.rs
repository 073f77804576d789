mod common;

use common::record;
use proptest::prelude::*;
use rayon::prelude::*;
use ubaforest::forest::ForestParams;
use ubaforest::ingest::LogRecord;
use ubaforest::model::{label_for, train_user_model, BundleMeta, Label, UserModel, DEFAULT_THRESHOLD};
use ubaforest::schema::{build_schema, BROWSERS, MATCH_RULES};
use ubaforest::synth::{generate, CorpusSpec, RecordsPerUser};
use ubaforest::Error;

#[test]
fn label_examples() {
    assert_eq!(DEFAULT_THRESHOLD, 0.80);
    assert_eq!(label_for(0.9307, DEFAULT_THRESHOLD), Label::Anomalous);
    assert_eq!(label_for(0.4118, DEFAULT_THRESHOLD), Label::Normal);
    assert_eq!(label_for(0.80, DEFAULT_THRESHOLD), Label::Normal);
}

#[test]
fn one_model_per_user_with_held_out_records() {
    let spec = CorpusSpec {
        user_count: 495,
        records_per_user: RecordsPerUser::Uniform { min: 501, max: 600 },
        ..CorpusSpec::default()
    };
    let store = generate(&spec).unwrap().user_store().unwrap();
    let schema = build_schema(6).unwrap();
    let models: Vec<UserModel> = store
        .users()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(user, records)| {
            let train = &records[100..];
            assert!((401..=500).contains(&train.len()));
            train_user_model(user, train, &schema, &ForestParams::default(), DEFAULT_THRESHOLD).unwrap()
        })
        .collect();
    assert_eq!(models.len(), 495);
    assert!(models.iter().all(|m| m.forest().dimensions() == 4 && m.training_records() >= 401));
}

#[test]
fn too_few_usable_records() {
    let schema = build_schema(6).unwrap();
    let one = vec![record("u", "03/03/2014 09:00:00", "USERKNOWN", "Y", "YY", "Chrome")];
    let err = train_user_model("u", &one, &schema, &ForestParams::default(), 0.8).unwrap_err();
    assert!(matches!(err, Error::InsufficientData { needed: 2, found: 1, .. }));
}

fn profile_records(n: usize) -> Vec<LogRecord> {
    (0..n)
        .map(|i| {
            let when = format!("03/{:02}/2014 {:02}:30:00", 1 + i % 28, i % 24);
            record("u", &when, "USERKNOWN", "Y", "YY", "Internet Explorer")
        })
        .collect()
}

#[test]
fn single_profile_user_scores_near_half() {
    for system in [1, 4, 6] {
        let schema = build_schema(system).unwrap();
        let recs = profile_records(500);
        let m = train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8).unwrap();
        for r in &recs {
            assert!(m.classify(r).unwrap().score.value() <= 0.55);
        }
    }
}

fn varied(n: usize, seed: usize) -> Vec<LogRecord> {
    (0..n)
        .map(|i| {
            let k = i * 7 + seed;
            let mr = MATCH_RULES[if k.is_multiple_of(9) { k % 8 } else { 7 }];
            let br = BROWSERS[if k.is_multiple_of(5) { k % 8 } else { 3 }];
            let when = format!("03/{:02}/2014 {:02}:00:00", 1 + k % 28, k % 24);
            record("u", &when, mr, "Y", "YY", br)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn raising_threshold_never_creates_anomalies(seed in 0usize..1000, t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let recs = varied(200, seed);
        let schema = build_schema(7).unwrap();
        let params = ForestParams::default().with_trees(25).with_seed(seed as u64);
        let m = train_user_model("u", &recs, &schema, &params, lo).unwrap();
        let raised = m.clone().with_threshold(hi).unwrap();
        for r in varied(50, seed + 1) {
            if m.classify(&r).unwrap().label == Label::Normal {
                prop_assert_eq!(raised.classify(&r).unwrap().label, Label::Normal);
            }
        }
    }

    #[test]
    fn bundles_preserve_scores_bitwise(seed in 0usize..1000) {
        let recs = varied(150, seed);
        let schema = build_schema(7).unwrap();
        let params = ForestParams::default().with_trees(10).with_seed(seed as u64);
        let m = train_user_model("u", &recs, &schema, &params, 0.8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let meta = m.save(dir.path()).unwrap();
        prop_assert_eq!(&BundleMeta::load(dir.path()).unwrap(), &meta);
        let back = UserModel::load(dir.path()).unwrap();
        for r in &recs {
            prop_assert_eq!(
                m.classify(r).unwrap().score.value().to_bits(),
                back.classify(r).unwrap().score.value().to_bits()
            );
        }
    }
}

#[test]
fn same_seed_same_bundle_bytes() {
    let recs = varied(300, 5);
    let schema = build_schema(6).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let hashes: Vec<String> = dirs
        .iter()
        .map(|d| {
            train_user_model("u", &recs, &schema, &ForestParams::default(), 0.8)
                .unwrap()
                .save(d.path())
                .unwrap()
                .content_hash
        })
        .collect();
    assert_eq!(hashes[0], hashes[1]);
    for f in ["model.json", "schema.json", "meta.json"] {
        assert_eq!(
            std::fs::read(dirs[0].path().join(f)).unwrap(),
            std::fs::read(dirs[1].path().join(f)).unwrap()
        );
    }
}
