//! Effective settings: command-line flags (and their `UBAFOREST_*`
//! environment fallbacks) over a JSON config file over built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use ubaforest::eval::ExperimentConfig;
use ubaforest::forest::{ForestParams, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED, DEFAULT_TREE_COUNT};
use ubaforest::ingest::{ColumnLayout, ParseMode};
use ubaforest::model::DEFAULT_THRESHOLD;

use crate::CliError;

/// Values a config file may set. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<Vec<u8>>,
    pub trees: Option<usize>,
    pub sample_size: Option<usize>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub runs: Option<usize>,
    pub band: Option<Band>,
    pub test_self: Option<usize>,
    pub test_other: Option<usize>,
    pub mode: Option<ParseMode>,
    pub jobs: Option<usize>,
    pub layout: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// Inclusive record-count band, written `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Band(pub usize, pub usize);

impl std::str::FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo > hi {
            return Err(format!("band {lo}:{hi} has lo > hi"));
        }
        Ok(Band(lo, hi))
    }
}

impl TryFrom<String> for Band {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Band> for String {
    fn from(b: Band) -> String {
        format!("{}:{}", b.0, b.1)
    }
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// JSON file with default settings; flags take precedence.
    #[arg(long, env = "UBAFOREST_CONFIG")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, env = "UBAFOREST_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    /// Trees per forest.
    #[arg(long, env = "UBAFOREST_TREES")]
    pub trees: Option<usize>,

    /// Subsample size per tree.
    #[arg(long, env = "UBAFOREST_SAMPLE_SIZE")]
    pub sample_size: Option<usize>,

    #[arg(long, env = "UBAFOREST_SEED")]
    pub seed: Option<u64>,

    /// Scores strictly above this are anomalous.
    #[arg(long, env = "UBAFOREST_THRESHOLD")]
    pub threshold: Option<f64>,
}

impl ForestArgs {
    pub fn resolve(&self, file: &FileConfig) -> (ForestParams, f64) {
        let params = ForestParams::default()
            .with_trees(self.trees.or(file.trees).unwrap_or(DEFAULT_TREE_COUNT))
            .with_sample_size(self.sample_size.or(file.sample_size).unwrap_or(DEFAULT_SAMPLE_SIZE))
            .with_seed(self.seed.or(file.seed).unwrap_or(DEFAULT_SEED));
        (params, self.threshold.or(file.threshold).unwrap_or(DEFAULT_THRESHOLD))
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Column layout JSON; defaults to the standard 42-column layout.
    #[arg(long, env = "UBAFOREST_LAYOUT")]
    pub layout: Option<PathBuf>,

    /// How malformed lines are handled.
    #[arg(long, env = "UBAFOREST_MODE", value_parser = ["lenient", "strict"])]
    pub mode: Option<String>,
}

impl InputArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<(ColumnLayout, Option<PathBuf>, ParseMode), CliError> {
        let path = self.layout.clone().or_else(|| file.layout.clone());
        let layout = match &path {
            Some(p) => ColumnLayout::load(p)?,
            None => ColumnLayout::default(),
        };
        let mode = match &self.mode {
            Some(m) => m.parse()?,
            None => file.mode.unwrap_or_default(),
        };
        Ok((layout, path, mode))
    }
}

/// Experiment settings echoed next to evaluation output.
pub fn experiment_config(
    forest: &ForestArgs,
    systems: &[u8],
    runs: Option<usize>,
    band: Option<Band>,
    test_self: Option<usize>,
    test_other: Option<usize>,
    file: &FileConfig,
) -> ExperimentConfig {
    let defaults = ExperimentConfig::default();
    let (params, threshold) = forest.resolve(file);
    let band = band.or(file.band).map_or(defaults.band, |b| (b.0, b.1));
    ExperimentConfig {
        systems: if systems.is_empty() {
            file.system.clone().unwrap_or(defaults.systems)
        } else {
            systems.to_vec()
        },
        runs: runs.or(file.runs).unwrap_or(defaults.runs),
        test_self: test_self.or(file.test_self).unwrap_or(defaults.test_self),
        test_other: test_other.or(file.test_other).unwrap_or(defaults.test_other),
        threshold,
        seed: params.seed,
        forest: params,
        band,
    }
}
