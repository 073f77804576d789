//! A single isolation tree: random axis-aligned partitions over a sample.

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::pathlen::expected_path_c;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Node of an isolation tree.
///
/// Points with `value < split` on `dim` descend left, all others right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    untagged,
    bound(serialize = "F: Serialize", deserialize = "F: DeserializeOwned")
)]
pub enum TreeNode<F> {
    Internal {
        dim: usize,
        split: F,
        left: Box<TreeNode<F>>,
        right: Box<TreeNode<F>>,
    },
    Leaf {
        leaf_size: usize,
    },
}

impl<F: Scalar> TreeNode<F> {
    pub fn leaf(size: usize) -> Self {
        TreeNode::Leaf { leaf_size: size }
    }

    pub fn internal(dim: usize, split: F, left: TreeNode<F>, right: TreeNode<F>) -> Self {
        TreeNode::Internal {
            dim,
            split,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Sum of leaf sizes, i.e. the number of training points the tree was built on.
    pub fn training_size(&self) -> usize {
        match self {
            TreeNode::Leaf { leaf_size } => *leaf_size,
            TreeNode::Internal { left, right, .. } => left.training_size() + right.training_size(),
        }
    }

    /// Largest dimension index referenced by any split, if any.
    pub fn max_dim(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                dim, left, right, ..
            } => Some(
                [Some(*dim), left.max_dim(), right.max_dim()]
                    .into_iter()
                    .flatten()
                    .max()
                    .unwrap_or(*dim),
            ),
        }
    }

    /// Walks `point` to its leaf, returning `(edges traversed, leaf size)`.
    pub fn descend(&self, point: &[F]) -> Result<(usize, usize)> {
        let mut node = self;
        let mut edges = 0usize;
        loop {
            match node {
                TreeNode::Leaf { leaf_size } => return Ok((edges, *leaf_size)),
                TreeNode::Internal {
                    dim,
                    split,
                    left,
                    right,
                } => {
                    let value = point.get(*dim).ok_or_else(|| {
                        Error::invalid(format!(
                            "point has {} dimensions, tree splits on dimension {}",
                            point.len(),
                            dim
                        ))
                    })?;
                    node = if *value < *split { left } else { right };
                    edges += 1;
                }
            }
        }
    }
}

/// Path length of `point` in `tree`: edges traversed plus `c(leaf size)`.
pub fn path_length<F: Scalar>(tree: &TreeNode<F>, point: &[F]) -> Result<F> {
    let (edges, size) = tree.descend(point)?;
    Ok(F::from_usize(edges).expect("edge count fits scalar") + expected_path_c::<F>(size))
}

/// Builds one isolation tree over `sample`.
///
/// Recursion stops when a node holds at most one point, when `height_limit`
/// is reached, or when every dimension is constant over the node's points.
pub fn build_tree<F, P, R>(sample: &[P], height_limit: usize, rng: &mut R) -> Result<TreeNode<F>>
where
    F: Scalar,
    P: AsRef<[F]>,
    R: Rng + ?Sized,
{
    let dims = check_uniform_dims(sample)?;
    let rows: Vec<&[F]> = sample.iter().map(AsRef::as_ref).collect();
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    Ok(grow(&rows, dims, &mut idx, 0, height_limit, rng))
}

pub(crate) fn check_uniform_dims<F, P: AsRef<[F]>>(sample: &[P]) -> Result<usize> {
    let dims = sample.first().map_or(0, |p| p.as_ref().len());
    for (i, p) in sample.iter().enumerate() {
        let len = p.as_ref().len();
        if len != dims {
            return Err(Error::invalid(format!(
                "vector {i} has {len} dimensions, expected {dims}"
            )));
        }
    }
    Ok(dims)
}

fn grow<F, R>(
    rows: &[&[F]],
    dims: usize,
    idx: &mut [usize],
    depth: usize,
    height_limit: usize,
    rng: &mut R,
) -> TreeNode<F>
where
    F: Scalar,
    R: Rng + ?Sized,
{
    if idx.len() <= 1 || depth >= height_limit {
        return TreeNode::leaf(idx.len());
    }

    let mut splittable: Vec<(usize, F, F)> = Vec::with_capacity(dims);
    for (d, &first) in rows[idx[0]].iter().enumerate().take(dims) {
        let (mut lo, mut hi) = (first, first);
        for &i in idx.iter().skip(1) {
            let v = rows[i][d];
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        if lo < hi {
            splittable.push((d, lo, hi));
        }
    }
    if splittable.is_empty() {
        return TreeNode::leaf(idx.len());
    }

    let (dim, lo, hi) = splittable[rng.random_range(0..splittable.len())];
    let split = loop {
        let s: F = rng.random_range(lo..hi);
        if s > lo && s < hi {
            break s;
        }
    };

    // Partition in place: values below the split first.
    let mut boundary = 0;
    for k in 0..idx.len() {
        if rows[idx[k]][dim] < split {
            idx.swap(k, boundary);
            boundary += 1;
        }
    }
    let (left_idx, right_idx) = idx.split_at_mut(boundary);
    let left = grow(rows, dims, left_idx, depth + 1, height_limit, rng);
    let right = grow(rows, dims, right_idx, depth + 1, height_limit, rng);
    TreeNode::internal(dim, split, left, right)
}
