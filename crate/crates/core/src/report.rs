//! Human-readable tables and machine-readable result files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{CvResult, Summary, SweepResult};

/// Percentages as `"mean (std)"` with two decimals, e.g. `70.00 (10.00)`.
pub fn percent_cell(s: Summary) -> String {
    format!("{:.2} ({:.2})", 100.0 * s.mean, 100.0 * s.std)
}

/// One row per pooling method with UA and overall accuracy cells.
pub fn cv_table(results: &[CvResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>16} {:>16} {:>6}", "pooling", "UA %", "accuracy %", "folds");
    for r in results {
        let _ = writeln!(
            out,
            "{:<16} {:>16} {:>16} {:>6}",
            r.pooling.as_str(),
            percent_cell(r.ua),
            percent_cell(r.accuracy),
            r.folds.len()
        );
    }
    out
}

/// Per-fold breakdown of one cross-validation run.
pub fn fold_table(result: &CvResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>6} {:>9} {:>11} {:>9} {:>10}", "fold", "UA %", "accuracy %", "val UA %", "best epoch");
    for f in &result.folds {
        let _ = writeln!(
            out,
            "{:>6} {:>9.2} {:>11.2} {:>9.2} {:>10}",
            f.fold,
            100.0 * f.test_ua,
            100.0 * f.test_accuracy,
            100.0 * f.val_ua,
            f.best_epoch
        );
    }
    out
}

fn cell_order(a: &crate::harness::SweepCell, b: &crate::harness::SweepCell) -> std::cmp::Ordering {
    a.heads
        .cmp(&b.heads)
        .then(a.dropout.total_cmp(&b.dropout))
        .then(a.label_smoothing.total_cmp(&b.label_smoothing))
}

/// Sweep cells ordered by grid coordinates.
pub fn sweep_table(result: &SweepResult) -> String {
    let mut cells: Vec<_> = result.cells.iter().collect();
    cells.sort_by(|a, b| cell_order(a, b));
    let mut out = String::new();
    let _ = writeln!(out, "{:>6} {:>8} {:>8} {:>16} {:>16}", "H", "p_d", "p_l", "UA %", "accuracy %");
    for c in cells {
        let (ua, acc) = match (c.ua, c.accuracy) {
            (Some(u), Some(a)) => (percent_cell(u), percent_cell(a)),
            _ => ("failed".to_string(), c.error.clone().unwrap_or_default()),
        };
        let _ = writeln!(
            out,
            "{:>6} {:>8.3} {:>8.3} {:>16} {:>16}",
            c.heads, c.dropout, c.label_smoothing, ua, acc
        );
    }
    out
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::input(format!("csv {}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `results.json`, `results.csv` (one row per fold) and
/// `confusion_fold<session>.csv` for each fold into `dir`.
pub fn write_cv(dir: impl AsRef<Path>, result: &CvResult, class_names: &[String]) -> Result<()> {
    let dir = dir.as_ref();
    write_json(dir.join("results.json"), result)?;
    let header: Vec<String> = ["fold", "pooling", "test_ua", "test_accuracy", "val_ua", "best_epoch"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = result
        .folds
        .iter()
        .map(|f| {
            vec![
                f.fold.to_string(),
                result.pooling.to_string(),
                f.test_ua.to_string(),
                f.test_accuracy.to_string(),
                f.val_ua.to_string(),
                f.best_epoch.to_string(),
            ]
        })
        .collect();
    write_csv(&dir.join("results.csv"), &header, &rows)?;
    for f in &result.folds {
        let mut header = vec!["true\\pred".to_string()];
        header.extend(class_names.iter().cloned());
        let rows: Vec<Vec<String>> = f
            .confusion
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let mut r = vec![class_names.get(k).cloned().unwrap_or_else(|| k.to_string())];
                r.extend(row.iter().map(u64::to_string));
                r
            })
            .collect();
        write_csv(&dir.join(format!("confusion_fold{}.csv", f.fold)), &header, &rows)?;
    }
    Ok(())
}

/// Writes `results.json` and `results.csv` (one row per grid cell).
pub fn write_sweep(dir: impl AsRef<Path>, result: &SweepResult) -> Result<()> {
    let dir = dir.as_ref();
    write_json(dir.join("results.json"), result)?;
    let header: Vec<String> = [
        "heads",
        "dropout",
        "label_smoothing",
        "ua_mean",
        "ua_std",
        "accuracy_mean",
        "accuracy_std",
        "error",
    ]
    .map(String::from)
    .to_vec();
    let fmt = |s: Option<Summary>, f: fn(Summary) -> f64| s.map(|s| f(s).to_string()).unwrap_or_default();
    let rows: Vec<Vec<String>> = result
        .cells
        .iter()
        .map(|c| {
            vec![
                c.heads.to_string(),
                c.dropout.to_string(),
                c.label_smoothing.to_string(),
                fmt(c.ua, |s| s.mean),
                fmt(c.ua, |s| s.std),
                fmt(c.accuracy, |s| s.mean),
                fmt(c.accuracy, |s| s.std),
                c.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(&dir.join("results.csv"), &header, &rows)
}
