//! Isolation forest over numeric feature vectors.
//!
//! Each tree is grown on a uniform subsample drawn without replacement.
//! A point's anomaly score is `2^(-E[h(x)] / c(psi))`, where `E[h(x)]` is its
//! mean path length across trees and `psi` the per-tree subsample size that
//! was actually used. Scores near 1 indicate points isolated close to the
//! root; scores near 0.5 indicate unremarkable points.

mod pathlen;
mod tree;
mod vector;

use std::cmp::Ordering;

use rand::seq::index;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use pathlen::{expected_path_c, harmonic};
pub use tree::{build_tree, path_length, TreeNode};
pub use vector::FeatureVector;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::stream_rng;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TREE_COUNT: usize = 100;
pub const DEFAULT_SAMPLE_SIZE: usize = 256;
pub const DEFAULT_SEED: u64 = 42;

/// Forest construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree_count: usize,
    pub sample_size: usize,
    /// Overrides `ceil(log2(sample_size))` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_limit: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree_count: DEFAULT_TREE_COUNT,
            sample_size: DEFAULT_SAMPLE_SIZE,
            height_limit: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl ForestParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, tree_count: usize) -> Self {
        self.tree_count = tree_count;
        self
    }

    pub fn with_sample_size(mut self, sample_size: usize) -> Self {
        self.sample_size = sample_size;
        self
    }

    pub fn with_height_limit(mut self, height_limit: usize) -> Self {
        self.height_limit = Some(height_limit);
        self
    }

    pub fn effective_height_limit(&self) -> usize {
        self.height_limit.unwrap_or_else(|| ceil_log2(self.sample_size))
    }

    pub fn validate(&self) -> Result<()> {
        if self.tree_count < 1 {
            return Err(Error::invalid("tree_count must be at least 1"));
        }
        if self.sample_size < 2 {
            return Err(Error::invalid("sample_size must be at least 2"));
        }
        Ok(())
    }
}

pub(crate) fn ceil_log2(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

/// Anomaly score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnomalyScore<F>(F);

impl<F: Scalar> AnomalyScore<F> {
    pub fn new(value: F) -> Result<Self> {
        if value >= F::zero() && value <= F::one() {
            Ok(AnomalyScore(value))
        } else {
            Err(Error::invalid(format!("anomaly score {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> F {
        self.0
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

/// A fitted, immutable isolation forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "ForestDocument<F>",
    bound(serialize = "F: Serialize", deserialize = "F: Scalar + DeserializeOwned")
)]
pub struct Forest<F> {
    format_version: u32,
    sample_size: usize,
    tree_count: usize,
    height_limit: usize,
    seed: u64,
    effective_sample_size: usize,
    dimensions: usize,
    trees: Vec<TreeNode<F>>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "F: Scalar + DeserializeOwned"))]
struct ForestDocument<F> {
    format_version: u32,
    sample_size: usize,
    tree_count: usize,
    height_limit: usize,
    seed: u64,
    effective_sample_size: usize,
    dimensions: usize,
    trees: Vec<TreeNode<F>>,
}

impl<F: Scalar> TryFrom<ForestDocument<F>> for Forest<F> {
    type Error = Error;

    fn try_from(doc: ForestDocument<F>) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: doc.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if doc.trees.len() != doc.tree_count || doc.tree_count == 0 {
            return Err(Error::invalid(format!(
                "tree_count {} but {} trees present",
                doc.tree_count,
                doc.trees.len()
            )));
        }
        if doc.effective_sample_size == 0 || doc.effective_sample_size > doc.sample_size {
            return Err(Error::invalid("effective_sample_size out of range"));
        }
        for (i, t) in doc.trees.iter().enumerate() {
            if t.max_dim().is_some_and(|d| d >= doc.dimensions) {
                return Err(Error::invalid(format!("tree {i} splits beyond dimension count")));
            }
        }
        Ok(Forest {
            format_version: doc.format_version,
            sample_size: doc.sample_size,
            tree_count: doc.tree_count,
            height_limit: doc.height_limit,
            seed: doc.seed,
            effective_sample_size: doc.effective_sample_size,
            dimensions: doc.dimensions,
            trees: doc.trees,
        })
    }
}

/// Fits a forest on `data`. Deterministic in `(data, params)`.
///
/// Tree `i` draws its subsample and splits from RNG stream `i` of
/// `params.seed`, so trees are built in parallel without affecting output.
pub fn fit_forest<F, P>(data: &[P], params: &ForestParams) -> Result<Forest<F>>
where
    F: Scalar,
    P: AsRef<[F]> + Sync,
{
    params.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("cannot fit a forest on empty data"));
    }
    let dimensions = tree::check_uniform_dims(data)?;
    if let Some(i) = data
        .iter()
        .position(|p| p.as_ref().iter().any(|v| !v.is_finite()))
    {
        return Err(Error::invalid(format!("vector {i} has a non-finite value")));
    }

    let n = data.len();
    let effective = params.sample_size.min(n);
    let height_limit = params.effective_height_limit();

    let trees = (0..params.tree_count)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(params.seed, t as u64);
            let sample: Vec<&[F]> = if effective == n {
                data.iter().map(AsRef::as_ref).collect()
            } else {
                index::sample(&mut rng, n, effective)
                    .into_iter()
                    .map(|i| data[i].as_ref())
                    .collect()
            };
            build_tree(&sample, height_limit, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Forest {
        format_version: FORMAT_VERSION,
        sample_size: params.sample_size,
        tree_count: params.tree_count,
        height_limit,
        seed: params.seed,
        effective_sample_size: effective,
        dimensions,
        trees,
    })
}

impl<F: Scalar> Forest<F> {
    pub fn trees(&self) -> &[TreeNode<F>] {
        &self.trees
    }

    pub fn tree_count(&self) -> usize {
        self.tree_count
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// Per-tree subsample size actually used: `min(sample_size, |data|)`.
    pub fn effective_sample_size(&self) -> usize {
        self.effective_sample_size
    }

    pub fn height_limit(&self) -> usize {
        self.height_limit
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dimensions(&self) -> usize {
        self.dimensions
    }

    fn check_point(&self, point: &[F]) -> Result<()> {
        if point.len() != self.dimensions {
            return Err(Error::invalid(format!(
                "point has {} dimensions, forest expects {}",
                point.len(),
                self.dimensions
            )));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point has a non-finite value"));
        }
        Ok(())
    }

    /// Mean path length `E[h(x)]` over all trees.
    pub fn mean_path_length(&self, point: &[F]) -> Result<F> {
        self.check_point(point)?;
        let mut total = F::zero();
        for tree in &self.trees {
            total = total + path_length(tree, point)?;
        }
        Ok(total / F::from_usize(self.trees.len()).expect("tree count fits scalar"))
    }

    /// Maps a mean path length to a score under this forest's normaliser.
    ///
    /// A forest fitted on a single point has `c(1) = 0`; every point then
    /// scores 0.5.
    pub fn score_for_mean_path(&self, mean_path: F) -> AnomalyScore<F> {
        let norm = expected_path_c::<F>(self.effective_sample_size);
        if norm <= F::zero() {
            return AnomalyScore(F::from_f64_lossy(0.5));
        }
        let two = F::one() + F::one();
        let s = two.powf(-mean_path / norm);
        AnomalyScore(s.max(F::zero()).min(F::one()))
    }

    pub fn anomaly_score(&self, point: &[F]) -> Result<AnomalyScore<F>> {
        Ok(self.score_for_mean_path(self.mean_path_length(point)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Free-function form of [`Forest::anomaly_score`].
pub fn anomaly_score<F: Scalar>(forest: &Forest<F>, point: &[F]) -> Result<AnomalyScore<F>> {
    forest.anomaly_score(point)
}
