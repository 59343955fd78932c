use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `confusion[true][pred]` counts.
pub fn confusion_matrix(preds: &[usize], labels: &[usize], classes: usize) -> Result<Vec<Vec<u64>>> {
    if preds.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut m = vec![vec![0u64; classes]; classes];
    for (&p, &l) in preds.iter().zip(labels) {
        if p >= classes || l >= classes {
            return Err(Error::Metric(format!("class index out of range ({l} -> {p})")));
        }
        m[l][p] += 1;
    }
    Ok(m)
}

/// Macro-averaged recall. Every class must occur in `labels`.
pub fn unweighted_accuracy(preds: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    ua_from_confusion(&confusion_matrix(preds, labels, classes)?)
}

pub fn ua_from_confusion(confusion: &[Vec<u64>]) -> Result<f64> {
    let mut total = 0.0;
    for (k, row) in confusion.iter().enumerate() {
        let n: u64 = row.iter().sum();
        if n == 0 {
            return Err(Error::Metric(format!("class {k} absent, recall undefined")));
        }
        total += row[k] as f64 / n as f64;
    }
    Ok(total / confusion.len() as f64)
}

pub fn accuracy_from_confusion(confusion: &[Vec<u64>]) -> f64 {
    let total: u64 = confusion.iter().flatten().sum();
    let hits: u64 = confusion.iter().enumerate().map(|(k, row)| row[k]).sum();
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary {
            mean,
            std: var.sqrt(),
        }
    }
}
