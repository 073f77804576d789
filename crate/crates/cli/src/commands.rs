use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use ubaforest::eval::{
    histogram_csv, render_table, report_csv, run_experiment_with, write_verdicts, VERDICT_HEADER,
};
use ubaforest::ingest::{expand_inputs, ingest_paths, read_records, user_file_name, UserStore};
use ubaforest::model::{train_user_model, UserModel};
use ubaforest::schema::build_schema;
use ubaforest::synth::{generate_corpus, CorpusSpec};

use crate::config::{experiment_config, Band, ConfigArg, FileConfig, ForestArgs, InputArgs};
use crate::CliError;

pub const CONFIG_ECHO: &str = "config.json";
pub const TRAIN_SUMMARY: &str = "train_summary.json";
pub const MODELS_DIR: &str = "models";
pub const SCORE_HEADER: [&str; 5] = ["user", "record_ref", "score", "label", "error"];

fn setup(config: &ConfigArg) -> Result<FileConfig, CliError> {
    let file = FileConfig::load(config.config.as_deref())?;
    if let Some(jobs) = config.jobs.or(file.jobs) {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(file)
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn echo_config(dir: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    write_file(&dir.join(CONFIG_ECHO), pretty(value))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Log files or directories of log files.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Record store directory to create.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    parse: InputArgs,
    #[command(flatten)]
    config: ConfigArg,
}

pub fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let file = setup(&args.config)?;
    let (layout, layout_path, mode) = args.parse.resolve(&file)?;
    let (store, report) = ingest_paths(&args.input, &layout, mode)?;
    create_dir(&args.output)?;
    let manifest = store.save(&args.output, &layout)?;
    write_file(&args.output.join("ingest_report.json"), pretty(&report))?;
    echo_config(
        &args.output,
        &json!({ "command": "ingest", "input": args.input, "layout": layout_path, "mode": mode }),
    )?;
    println!(
        "users: {}\nrecords: {}\nlines: {}\nskipped lines: {}\nconsistency violations: {}",
        manifest.users.len(),
        manifest.total_records,
        report.lines,
        report.skipped,
        report.consistency_violations
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Record store directory written by `ingest`.
    #[arg(long)]
    input: PathBuf,
    /// Directory for model bundles.
    #[arg(long)]
    output: PathBuf,
    /// Feature system (1-7).
    #[arg(long, env = "UBAFOREST_SYSTEM", value_parser = clap::value_parser!(u8).range(1..=7))]
    system: Option<u8>,
    /// Only model users whose record count lies in `lo:hi`.
    #[arg(long, env = "UBAFOREST_BAND")]
    band: Option<Band>,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainedEntry {
    pub user: String,
    pub dir: String,
    pub training_records: usize,
    pub content_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub user: String,
    pub reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub system: u8,
    pub trained: Vec<TrainedEntry>,
    pub skipped: Vec<SkippedEntry>,
}

fn bundle_dir_name(user: &str) -> String {
    let name = user_file_name(user);
    name.trim_end_matches(".csv").to_owned()
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let file = setup(&args.config)?;
    let system = match (args.system, file.system.as_deref()) {
        (Some(s), _) => s,
        (None, Some([s])) => *s,
        (None, Some(_)) => return Err(CliError::usage("config must name exactly one system for train")),
        (None, None) => return Err(CliError::usage("--system is required")),
    };
    let schema = build_schema(system)?;
    let (params, threshold) = args.forest.resolve(&file);
    params.validate()?;
    ubaforest::model::validate_threshold(threshold)?;
    let band = args.band.or(file.band);

    let (store, _) = UserStore::load(&args.input)?;
    let users: Vec<(&str, &[ubaforest::ingest::LogRecord])> = store
        .users()
        .filter(|(_, r)| band.is_none_or(|b| (b.0..=b.1).contains(&r.len())))
        .collect();
    let models_dir = args.output.join(MODELS_DIR);
    create_dir(&models_dir)?;
    let results: Vec<Result<TrainedEntry, SkippedEntry>> = users
        .par_iter()
        .map(|(user, records)| {
            let skip = |e: ubaforest::Error| SkippedEntry {
                user: user.to_string(),
                reason: e.to_string(),
            };
            let model = train_user_model(user, records, &schema, &params, threshold).map_err(skip)?;
            let dir = bundle_dir_name(user);
            let meta = model.save(&models_dir.join(&dir)).map_err(skip)?;
            Ok(TrainedEntry {
                user: user.to_string(),
                dir,
                training_records: meta.training_records,
                content_hash: meta.content_hash,
            })
        })
        .collect();
    let mut summary = TrainSummary {
        system,
        trained: Vec::new(),
        skipped: Vec::new(),
    };
    for r in results {
        match r {
            Ok(t) => summary.trained.push(t),
            Err(s) => summary.skipped.push(s),
        }
    }
    write_file(&args.output.join(TRAIN_SUMMARY), pretty(&summary))?;
    echo_config(
        &args.output,
        &json!({
            "command": "train",
            "input": args.input,
            "system": system,
            "params": params,
            "threshold": threshold,
            "band": band,
        }),
    )?;
    println!("trained: {}\nskipped: {}", summary.trained.len(), summary.skipped.len());
    for s in &summary.skipped {
        println!("  {}: {}", s.user, s.reason);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Directory written by `train`.
    #[arg(long)]
    models: PathBuf,
    /// Log files or directories of log files to score.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Verdict CSV; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the threshold stored in each model.
    #[arg(long, env = "UBAFOREST_THRESHOLD")]
    threshold: Option<f64>,
    #[command(flatten)]
    parse: InputArgs,
    #[command(flatten)]
    config: ConfigArg,
}

pub fn score(args: ScoreArgs) -> Result<(), CliError> {
    let file = setup(&args.config)?;
    let (layout, _, mode) = args.parse.resolve(&file)?;
    let threshold = args.threshold.or(file.threshold);
    let summary_path = args.models.join(TRAIN_SUMMARY);
    let summary: TrainSummary = serde_json::from_str(
        &fs::read_to_string(&summary_path)
            .map_err(|e| CliError::usage(format!("{}: {e}", summary_path.display())))?,
    )
    .map_err(|e| CliError::usage(format!("{}: {e}", summary_path.display())))?;
    let dirs: BTreeMap<&str, &str> = summary.trained.iter().map(|t| (t.user.as_str(), t.dir.as_str())).collect();
    let mut models: BTreeMap<String, UserModel> = BTreeMap::new();

    let sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut out = csv::Writer::from_writer(std::io::BufWriter::new(sink));
    out.write_record(SCORE_HEADER).map_err(ubaforest::Error::from)?;
    let (mut scored, mut errors, mut skipped_lines) = (0u64, 0u64, 0u64);
    for path in expand_inputs(&args.input)? {
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        let f = fs::File::open(&path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let mut records = Vec::new();
        let report = read_records(std::io::BufReader::new(f), &layout, mode, |r| records.push(r))?;
        skipped_lines += report.skipped;
        for (i, r) in records.iter().enumerate() {
            let record_ref = r.record_id(&layout).map_or_else(|| format!("{name}#{i}"), str::to_owned);
            let verdict = match dirs.get(r.user_id.as_str()) {
                None => Err(format!("no model for user {}", r.user_id)),
                Some(dir) => {
                    if !models.contains_key(&r.user_id) {
                        let mut m = UserModel::load(&args.models.join(MODELS_DIR).join(dir))?;
                        if let Some(t) = threshold {
                            m = m.with_threshold(t)?;
                        }
                        models.insert(r.user_id.clone(), m);
                    }
                    models[&r.user_id].classify(r).map_err(|e| e.to_string())
                }
            };
            let row = match verdict {
                Ok(v) => {
                    scored += 1;
                    [r.user_id.clone(), record_ref, format!("{}", v.score.value()), v.label.as_str().to_owned(), String::new()]
                }
                Err(reason) => {
                    errors += 1;
                    [r.user_id.clone(), record_ref, String::new(), String::new(), reason]
                }
            };
            out.write_record(&row).map_err(ubaforest::Error::from)?;
        }
    }
    out.flush()?;
    eprintln!("scored: {scored}\nerror rows: {errors}\nskipped lines: {skipped_lines}");
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Record store directory written by `ingest`.
    #[arg(long)]
    input: PathBuf,
    /// Directory for the report files.
    #[arg(long)]
    output: PathBuf,
    /// Feature systems to compare (1-7); all seven by default.
    #[arg(long, env = "UBAFOREST_SYSTEM", value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=7))]
    system: Vec<u8>,
    /// Repetitions of the random train/test split.
    #[arg(long, env = "UBAFOREST_RUNS")]
    runs: Option<usize>,
    /// Model users whose record count lies in `lo:hi`.
    #[arg(long, env = "UBAFOREST_BAND")]
    band: Option<Band>,
    /// Own records held out per user.
    #[arg(long, env = "UBAFOREST_TEST_SELF")]
    test_self: Option<usize>,
    /// Foreign records tested per user.
    #[arg(long, env = "UBAFOREST_TEST_OTHER")]
    test_other: Option<usize>,
    /// Also write every test verdict to verdicts.csv.
    #[arg(long)]
    verdicts: bool,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    config: ConfigArg,
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let file = setup(&args.config)?;
    let config = experiment_config(
        &args.forest,
        &args.system,
        args.runs,
        args.band,
        args.test_self,
        args.test_other,
        &file,
    );
    config.validate()?;
    let (store, _) = UserStore::load(&args.input)?;
    create_dir(&args.output)?;

    let mut verdicts = None;
    if args.verdicts {
        let path = args.output.join("verdicts.csv");
        let f = fs::File::create(&path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
        w.write_record(VERDICT_HEADER).map_err(ubaforest::Error::from)?;
        verdicts = Some(w);
    }
    let mut write_error = None;
    let report = run_experiment_with(&store, &config, |system, run, trial| {
        if let Some(w) = verdicts.as_mut() {
            if let Err(e) = write_verdicts(w, system, run, trial) {
                write_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    if let Some(mut w) = verdicts {
        w.flush()?;
    }
    if report.users.is_empty() {
        return Err(CliError::data(format!(
            "no users with {}..={} records",
            config.band.0, config.band.1
        )));
    }

    let table = render_table(&report);
    write_file(&args.output.join("report.txt"), &table)?;
    write_file(&args.output.join("report.csv"), report_csv(&report))?;
    write_file(&args.output.join("report.json"), pretty(&report))?;
    let hist_dir = args.output.join("histograms");
    create_dir(&hist_dir)?;
    for s in &report.systems {
        for r in 0..config.runs {
            if let Some(h) = report.histogram(s.system_id, r) {
                write_file(&hist_dir.join(format!("system{}-run{r}.csv", s.system_id)), histogram_csv(&h))?;
            }
        }
    }
    echo_config(&args.output, &json!({ "command": "evaluate", "input": args.input, "experiment": config }))?;
    print!("{table}");
    println!("users: {}", report.users.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus spec JSON; built-in defaults when omitted.
    #[arg(long, env = "UBAFOREST_SPEC")]
    spec: Option<PathBuf>,
    /// Directory for the corpus.
    #[arg(long)]
    output: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long, env = "UBAFOREST_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    config: ConfigArg,
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let file = setup(&args.config)?;
    let mut spec = match &args.spec {
        Some(p) => CorpusSpec::load(p)?,
        None => CorpusSpec::default(),
    };
    if let Some(seed) = args.seed.or(file.seed) {
        spec.seed = seed;
    }
    spec.validate()?;
    create_dir(&args.output)?;
    let manifest = generate_corpus(&spec, &args.output)?;
    write_file(&args.output.join("spec.json"), pretty(&spec))?;
    println!(
        "users: {}\nrecords: {}\ninjected: {}\nfiles: {}",
        manifest.users,
        manifest.total_records,
        manifest.injected_records,
        manifest.files.len()
    );
    Ok(())
}
