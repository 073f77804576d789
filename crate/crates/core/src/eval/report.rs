//! Text and CSV renderings of experiment results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use super::experiment::{ExperimentReport, RecordClass, TrialOutcome};
use super::metrics::MetricsReport;
use crate::error::Result;

fn pct(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.2}%", x * 100.0),
        None => "n/a".to_owned(),
    }
}

fn row_cells(m: &MetricsReport) -> [String; 5] {
    m.values().map(pct)
}

const HEADERS: [&str; 6] = ["System", "TP rate", "FP rate", "Precision", "Recall", "Accuracy"];

/// Aligned text table, one row per system.
pub fn render_table(report: &ExperimentReport) -> String {
    let rows: Vec<[String; 6]> = report
        .systems
        .iter()
        .map(|s| {
            let c = row_cells(&s.metrics);
            [
                s.label.clone(),
                c[0].clone(),
                c[1].clone(),
                c[2].clone(),
                c[3].clone(),
                c[4].clone(),
            ]
        })
        .collect();
    let mut widths = HEADERS.map(str::len);
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &HEADERS);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in &rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    out
}

/// CSV with one row per system; percentages with two decimals.
pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("system_id,system,tp_rate,fp_rate,precision,recall,accuracy\n");
    for s in &report.systems {
        let c = row_cells(&s.metrics).map(|v| v.trim_end_matches('%').to_owned());
        let _ = writeln!(
            out,
            "{},\"{}\",{},{},{},{},{}",
            s.system_id, s.label, c[0], c[1], c[2], c[3], c[4]
        );
    }
    out
}

/// Histogram as `own_anomalies,users` pairs.
pub fn histogram_csv(hist: &BTreeMap<u64, usize>) -> String {
    let mut out = String::from("own_anomalies,users\n");
    for (k, v) in hist {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub const VERDICT_HEADER: [&str; 7] = ["system", "run", "user", "record_ref", "score", "label", "class"];

/// Appends a trial's verdict rows to a CSV writer.
pub fn write_verdicts<W: Write>(
    writer: &mut csv::Writer<W>,
    system_id: u8,
    run: usize,
    trial: &TrialOutcome,
) -> Result<()> {
    for v in &trial.verdicts {
        writer.write_record([
            system_id.to_string(),
            run.to_string(),
            v.user.clone(),
            v.record_ref.clone(),
            format!("{}", v.score),
            v.label.as_str().to_owned(),
            match v.class {
                RecordClass::Own => "own".to_owned(),
                RecordClass::Foreign => "foreign".to_owned(),
            },
        ])?;
    }
    Ok(())
}
