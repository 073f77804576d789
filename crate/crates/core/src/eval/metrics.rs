use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Binary confusion counts. The positive class is "belongs to this user".
///
/// In a 2x2 table with actual rows (A, B) and predicted columns (A, B),
/// class A reads `a = tp`, `b = fn`, `c = fp`, `d = tn`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    /// Counts for class A of the table `[[a, b], [c, d]]`.
    pub fn from_table_for_a(a: u64, b: u64, c: u64, d: u64) -> Self {
        ConfusionMatrix::new(a, c, d, b)
    }

    /// Counts for class B of the table `[[a, b], [c, d]]`.
    pub fn from_table_for_b(a: u64, b: u64, c: u64, d: u64) -> Self {
        ConfusionMatrix::new(d, b, a, c)
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

/// The five single-figure measures. `None` marks a 0/0 ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp_rate: Option<f64>,
    pub fp_rate: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
}

impl MetricsReport {
    pub fn values(&self) -> [Option<f64>; 5] {
        [
            self.tp_rate,
            self.fp_rate,
            self.precision,
            self.recall,
            self.accuracy,
        ]
    }

    pub fn from_values(v: [Option<f64>; 5]) -> Self {
        MetricsReport {
            tp_rate: v[0],
            fp_rate: v[1],
            precision: v[2],
            recall: v[3],
            accuracy: v[4],
        }
    }
}

pub const METRIC_NAMES: [&str; 5] = ["tp_rate", "fp_rate", "precision", "recall", "accuracy"];

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    MetricsReport {
        tp_rate: ratio(cm.tp, cm.tp + cm.fn_),
        fp_rate: ratio(cm.fp, cm.fp + cm.tn),
        precision: ratio(cm.tp, cm.tp + cm.fp),
        recall: ratio(cm.tp, cm.tp + cm.fn_),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
    }
}

/// Bins users by how many of their own test records were flagged anomalous.
pub fn anomalous_count_histogram(counts: &[u64]) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for &c in counts {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}
