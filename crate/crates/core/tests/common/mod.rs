//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use ubaforest::forest::TreeNode;
use ubaforest::ingest::{format_timestamp, parse_timestamp, LogRecord, STANDARD_COLUMNS};

/// Thirteen points: a cluster around the medoid (7, 13) and one far point (17, 17).
pub const CLUSTER_POINTS: [[f64; 2]; 13] = [
    [17.0, 17.0],
    [7.0, 13.0],
    [6.0, 12.0],
    [8.0, 14.0],
    [5.0, 11.0],
    [9.0, 12.0],
    [6.0, 15.0],
    [8.0, 11.0],
    [7.0, 10.0],
    [4.0, 13.0],
    [10.0, 14.0],
    [5.0, 16.0],
    [9.0, 16.0],
];

pub const ANOMALY: [f64; 2] = [17.0, 17.0];
pub const MEDOID: [f64; 2] = [7.0, 13.0];

/// A partition of [`CLUSTER_POINTS`] that isolates the anomaly at depth 1 and
/// the medoid at depth 5.
pub fn cluster_tree() -> TreeNode<f64> {
    use TreeNode as T;
    let d4 = T::internal(0, 7.5, T::leaf(1), T::leaf(2));
    let d3 = T::internal(1, 15.0, d4, T::leaf(1));
    let d2 = T::internal(0, 6.5, T::leaf(3), d3);
    let d1 = T::internal(1, 12.5, T::leaf(5), d2);
    T::internal(0, 12.0, d1, T::leaf(1))
}

/// Root-to-leaf walk written without the library's traversal: returns
/// (edges, leaf size).
pub fn brute_force_walk(tree: &TreeNode<f64>, point: &[f64]) -> (usize, usize) {
    let mut node = tree;
    let mut edges = 0;
    loop {
        match node {
            TreeNode::Leaf { leaf_size } => return (edges, *leaf_size),
            TreeNode::Internal {
                dim,
                split,
                left,
                right,
            } => {
                node = if point[*dim] < *split { left } else { right };
                edges += 1;
            }
        }
    }
}

/// `2 * sum_{i=1}^{n-1} 1/i - 2 (n - 1) / n`, summed directly.
pub fn c_oracle(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (n - 1) as f64 / n as f64
}

/// Weekday of a Gregorian date (Monday = 0), by Sakamoto's method.
pub fn weekday_oracle(y: i32, m: u32, d: u32) -> u8 {
    const T: [i32; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
    let y = if m < 3 { y - 1 } else { y };
    let sunday0 = (y + y / 4 - y / 100 + y / 400 + T[m as usize - 1] + d as i32) % 7;
    ((sunday0 + 6) % 7) as u8
}

fn col(name: &str) -> usize {
    STANDARD_COLUMNS.iter().position(|c| *c == name).unwrap()
}

/// A standard-layout line; unspecified columns are blank.
pub fn log_line(
    log_id: &str,
    when: &str,
    user: &str,
    match_rule: &str,
    signature: &str,
    device: &str,
    device_signature: &str,
) -> String {
    let mut fields = vec![String::new(); STANDARD_COLUMNS.len()];
    fields[col("LOG_ID")] = log_id.into();
    fields[col("DATE_TIME")] = when.into();
    fields[col("USER_ID")] = user.into();
    fields[col("MATCH_RULE")] = match_rule.into();
    fields[col("SIGNATURE_CHECK")] = signature.into();
    fields[col("DEVICE_CHECK")] = device.into();
    fields[col("DEVICE_SIGNATURE")] = device_signature.into();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    w.write_record(&fields).unwrap();
    String::from_utf8(w.into_inner().unwrap()).unwrap().trim_end().to_owned()
}

pub const IE: &str = "Mozilla/4.0 (compatible; MSIE 8.0; Windows NT 6.1; Trident/4.0)";
pub const CHROME: &str =
    "Mozilla/5.0 (Windows NT 6.1) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/33.0 Safari/537.36";

/// A parsed record with the given categorical values.
pub fn record(user: &str, when: &str, mr: &str, sig: &str, dev: &str, browser: &str) -> LogRecord {
    let (timestamp, day_of_week, hour_of_day) = parse_timestamp(when).unwrap();
    assert_eq!(format_timestamp(&timestamp), when);
    LogRecord {
        user_id: user.into(),
        timestamp,
        day_of_week,
        hour_of_day,
        match_rule: mr.into(),
        signature_check: sig.into(),
        device_check: dev.into(),
        browser: browser.into(),
        consistency_violation: dev != "NN" && sig == "N",
        raw_fields: csv::StringRecord::new(),
    }
}
