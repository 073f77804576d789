use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ubaforest::schema::{BROWSERS, MATCH_RULES};
use ubaforest::synth::{generate, inject_known_anomalies, CorpusSpec, ProfileDelta, RecordsPerUser, Separability};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ubaforest"));
    for (k, _) in std::env::vars() {
        if k.starts_with("UBAFOREST_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("spec.json");
    fs::write(&p, body).unwrap();
    p
}

const FIFTY: &str = r#"{"user_count": 50, "records_per_user": {"kind": "uniform", "min": 120, "max": 160}, "seed": 11}"#;

#[test]
fn synth_then_ingest_matches_manifest() {
    let t = tempfile::tempdir().unwrap();
    let spec = write_spec(t.path(), FIFTY);
    let a = t.path().join("a");
    let b = t.path().join("b");
    ok(&["synth", "--spec", s(&spec), "--output", s(&a)]);
    ok(&["synth", "--spec", s(&spec), "--output", s(&b)]);
    assert_eq!(read_tree(&a), read_tree(&b));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let store = t.path().join("store");
    let stdout = ok(&["ingest", "--input", s(&a.join("logs")), "--output", s(&store)]);
    assert!(stdout.contains(&format!("records: {}", manifest["total_records"])));
    assert!(stdout.contains("users: 50"));
    let stored: serde_json::Value = serde_json::from_slice(&fs::read(store.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(stored["total_records"], manifest["total_records"]);
    for u in stored["users"].as_array().unwrap() {
        assert_eq!(u["count"], manifest["records_per_user"][u["user_id"].as_str().unwrap()]);
    }

    let c = t.path().join("c");
    ok(&["synth", "--spec", s(&spec), "--output", s(&c), "--seed", "12"]);
    assert_ne!(read_tree(&a), read_tree(&c));
}

#[test]
fn usage_and_data_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let out = s(&t.path().join("out")).to_owned();
    assert_eq!(code(&["ingest", "--input", "/nonexistent/logs", "--output", &out]), 2);
    assert_eq!(code(&["frobnicate"]), 2);

    let bad = t.path().join("bad.csv");
    fs::write(&bad, "only,three,fields\n").unwrap();
    assert_eq!(code(&["ingest", "--input", s(&bad), "--output", &out, "--mode", "strict"]), 3);
    assert_eq!(code(&["ingest", "--input", s(&bad), "--output", &out]), 0);

    let spec = write_spec(t.path(), "{\"user_count\": ");
    assert_eq!(code(&["synth", "--spec", s(&spec), "--output", &out]), 2);
    let spec = write_spec(t.path(), r#"{"usr_count": 3}"#);
    assert_eq!(code(&["synth", "--spec", s(&spec), "--output", &out]), 2);

    let cfg = t.path().join("cfg.json");
    fs::write(&cfg, r#"{"runs": 0}"#).unwrap();
    assert_eq!(code(&["evaluate", "--input", s(t.path()), "--output", &out, "--config", s(&cfg)]), 2);

    let res = run(&["evaluate", "--input", s(t.path()), "--output", &out, "--system", "9"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage"));
}

fn fifty_user_store(root: &Path) -> PathBuf {
    let spec = write_spec(root, FIFTY);
    let corpus = root.join("corpus");
    ok(&["synth", "--spec", s(&spec), "--output", s(&corpus)]);
    // one extra user with a single record
    let mut lines = fs::read_to_string(corpus.join("logs/logs-0000.csv")).unwrap();
    let first = lines.lines().next().unwrap().replace("user00001", "loner");
    lines.push_str(&first);
    lines.push('\n');
    fs::write(corpus.join("logs/logs-0000.csv"), lines).unwrap();
    let store = root.join("store");
    ok(&["ingest", "--input", s(&corpus.join("logs")), "--output", s(&store)]);
    store
}

#[test]
fn train_bundles_skips_and_determinism() {
    let t = tempfile::tempdir().unwrap();
    let store = fifty_user_store(t.path());
    let a = t.path().join("models-a");
    let b = t.path().join("models-b");
    let stdout = ok(&["train", "--input", s(&store), "--output", s(&a), "--system", "6", "--trees", "30"]);
    assert!(stdout.contains("trained: 50"));
    assert!(stdout.contains("skipped: 1"));
    assert!(stdout.contains("loner"));
    assert_eq!(fs::read_dir(a.join("models")).unwrap().count(), 50);

    let out = bin()
        .args(["train", "--input", s(&store), "--output", s(&b), "--system", "6", "--jobs", "1"])
        .env("UBAFOREST_TREES", "30")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read_tree(&a), read_tree(&b));

    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("train_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trained"].as_array().unwrap().len(), 50);
    assert_eq!(summary["skipped"][0]["user"], "loner");

    assert_eq!(code(&["train", "--input", s(&store), "--output", s(&a)]), 2);
}

#[test]
fn flags_override_config_file_and_env() {
    let t = tempfile::tempdir().unwrap();
    let store = fifty_user_store(t.path());
    let cfg = t.path().join("cfg.json");
    fs::write(&cfg, r#"{"system": [3], "trees": 7, "seed": 5, "threshold": 0.9}"#).unwrap();
    let echo = |dir: &Path| -> serde_json::Value {
        serde_json::from_slice(&fs::read(dir.join("config.json")).unwrap()).unwrap()
    };

    let a = t.path().join("a");
    ok(&["train", "--input", s(&store), "--output", s(&a), "--config", s(&cfg)]);
    let e = echo(&a);
    assert_eq!((e["system"].as_u64(), e["params"]["tree_count"].as_u64()), (Some(3), Some(7)));
    assert_eq!(e["params"]["seed"], 5);
    assert_eq!(e["threshold"], 0.9);

    let b = t.path().join("b");
    let out = bin()
        .args(["train", "--input", s(&store), "--output", s(&b), "--config", s(&cfg), "--trees", "9"])
        .env("UBAFOREST_SEED", "6")
        .output()
        .unwrap();
    assert!(out.status.success());
    let e = echo(&b);
    assert_eq!(e["params"]["tree_count"], 9);
    assert_eq!(e["params"]["seed"], 6);
    assert_eq!(e["params"]["sample_size"], 256);
}

fn far_end(v: u8) -> usize {
    if v < 4 {
        7
    } else {
        0
    }
}

#[test]
fn score_ranks_injected_records_first() {
    let t = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        user_count: 40,
        records_per_user: RecordsPerUser::Uniform { min: 600, max: 600 },
        separability: Separability::High,
        seed: 3,
        ..CorpusSpec::default()
    };
    let mut corpus = generate(&spec).unwrap();
    let user = corpus
        .users()
        .iter()
        .map(|u| u.id.clone())
        .find(|u| {
            let p = corpus.usual_profile(u).unwrap();
            p.browser.abs_diff(far_end(p.browser) as u8) >= 6 && p.match_rule.abs_diff(far_end(p.match_rule) as u8) >= 6
        })
        .unwrap();
    let p = corpus.usual_profile(&user).unwrap();
    let delta = ProfileDelta {
        browser: Some(BROWSERS[far_end(p.browser)].into()),
        match_rule: Some(MATCH_RULES[far_end(p.match_rule)].into()),
        ..ProfileDelta::default()
    };
    let injected = inject_known_anomalies(&mut corpus, &user, 2, &delta).unwrap();
    let dir = t.path().join("corpus");
    corpus.write(&dir).unwrap();

    // hold out the injected records plus 98 of the user's normal ones
    let mut train = csv::WriterBuilder::new().has_headers(false).from_path(t.path().join("train.csv")).unwrap();
    let mut test = csv::WriterBuilder::new().has_headers(false).from_path(t.path().join("test.csv")).unwrap();
    let mut held_normal = 0;
    let mut seen = 0;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(dir.join("logs/logs-0000.csv")).unwrap();
    for row in reader.records() {
        let row = row.unwrap();
        let own = &row[2] == user.as_str();
        let is_injected = injected.iter().any(|r| r == &row[0]);
        if own && !is_injected {
            seen += 1;
        }
        if is_injected || (own && seen % 6 == 0 && held_normal < 98 && {
            held_normal += 1;
            true
        }) {
            test.write_record(&row).unwrap();
        } else {
            train.write_record(&row).unwrap();
        }
    }
    train.flush().unwrap();
    test.flush().unwrap();
    assert_eq!(held_normal, 98);

    let store = t.path().join("store");
    let models = t.path().join("models");
    let verdicts = t.path().join("verdicts.csv");
    ok(&["ingest", "--input", s(&t.path().join("train.csv")), "--output", s(&store)]);
    ok(&["train", "--input", s(&store), "--output", s(&models), "--system", "6", "--band", "490:600"]);
    ok(&["score", "--models", s(&models), "--input", s(&t.path().join("test.csv")), "--output", s(&verdicts)]);

    let mut rows: Vec<(String, f64, String)> = csv::Reader::from_path(&verdicts)
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(&r[4], "");
            (r[1].to_owned(), r[2].parse().unwrap(), r[3].to_owned())
        })
        .collect();
    assert_eq!(rows.len(), 100);
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut top: Vec<&String> = rows[..2].iter().map(|r| &r.0).collect();
    top.sort();
    assert_eq!(top, injected.iter().collect::<Vec<_>>());
    assert!(rows[..2].iter().all(|r| r.2 == "anomalous"));
    assert!(rows[2..].iter().filter(|r| r.2 == "normal").count() >= 95);
}

#[test]
fn score_error_rows_and_empty_input() {
    let t = tempfile::tempdir().unwrap();
    let store = fifty_user_store(t.path());
    let models = t.path().join("models");
    ok(&["train", "--input", s(&store), "--output", s(&models), "--system", "4", "--trees", "10"]);

    let empty = t.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = ok(&["score", "--models", s(&models), "--input", s(&empty)]);
    assert_eq!(out, "user,record_ref,score,label,error\n");

    let logs = fs::read_to_string(t.path().join("corpus/logs/logs-0000.csv")).unwrap();
    let line = logs.lines().find(|l| l.contains("user00002")).unwrap();
    let mut fields: Vec<String> = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes())
        .records()
        .next()
        .unwrap()
        .unwrap()
        .iter()
        .map(str::to_owned)
        .collect();
    fields[9] = "curl/7.35".into();
    let odd = t.path().join("odd.csv");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&odd).unwrap();
    w.write_record(&fields).unwrap();
    fields[2] = "stranger".into();
    w.write_record(&fields).unwrap();
    w.flush().unwrap();

    let out = ok(&["score", "--models", s(&models), "--input", s(&odd)]);
    let rows: Vec<csv::StringRecord> = csv::Reader::from_reader(out.as_bytes()).records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][2], "");
    assert!(rows[0][4].contains("UNKNOWN"), "{:?}", rows[0]);
    assert!(rows[1][4].contains("no model"));
}

#[test]
fn evaluate_writes_reports_deterministically() {
    let t = tempfile::tempdir().unwrap();
    let store = fifty_user_store(t.path());
    let args = |out: &Path, jobs: &str| {
        vec![
            "evaluate".to_owned(),
            "--input".into(),
            s(&store).into(),
            "--output".into(),
            s(out).into(),
            "--system".into(),
            "1,6".into(),
            "--runs".into(),
            "1".into(),
            "--band".into(),
            "120:160".into(),
            "--test-self".into(),
            "40".into(),
            "--test-other".into(),
            "40".into(),
            "--trees".into(),
            "25".into(),
            "--jobs".into(),
            jobs.into(),
            "--verdicts".into(),
        ]
    };
    let a = t.path().join("a");
    let b = t.path().join("b");
    let stdout = ok(&args(&a, "1").iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout.contains("System 6: Combined 4 features"));
    ok(&args(&b, "3").iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(read_tree(&a), read_tree(&b));

    let hist = fs::read_to_string(a.join("histograms/system6-run0.csv")).unwrap();
    assert!(hist.starts_with("own_anomalies,users\n"));
    let users: usize = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(users, 50);
    assert_eq!(fs::read_to_string(a.join("report.csv")).unwrap().lines().count(), 3);
    assert_eq!(fs::read_to_string(a.join("verdicts.csv")).unwrap().lines().count(), 1 + 2 * 50 * 80);

    let none = t.path().join("none");
    assert_eq!(
        code(&["evaluate", "--input", s(&store), "--output", s(&none), "--band", "5000:6000", "--runs", "1"]),
        3
    );
}
