use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate_in, pool, single_fold};
use super::metrics::Summary;
use crate::config::TrainConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Values to try per hyperparameter; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub heads: Vec<usize>,
    pub dropout: Vec<f64>,
    pub label_smoothing: Vec<f64>,
}

impl SweepGrid {
    pub fn axes(&self) -> Vec<&'static str> {
        let mut axes = Vec::new();
        if !self.heads.is_empty() {
            axes.push("heads");
        }
        if !self.dropout.is_empty() {
            axes.push("dropout");
        }
        if !self.label_smoothing.is_empty() {
            axes.push("label_smoothing");
        }
        axes
    }

    /// Grid cells as configs, heads-major then dropout then smoothing.
    pub fn cells(&self, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
        if self.axes().is_empty() {
            return Err(Error::config("sweep grid has no axes"));
        }
        let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
        let heads = if self.heads.is_empty() {
            vec![base.heads]
        } else {
            self.heads.clone()
        };
        let mut cells = Vec::new();
        for &h in &heads {
            for &p_d in &or_base(&self.dropout, base.dropout) {
                for &p_l in &or_base(&self.label_smoothing, base.label_smoothing) {
                    cells.push(TrainConfig {
                        heads: h,
                        dropout: p_d,
                        label_smoothing: p_l,
                        ..base.clone()
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// Evaluate every cell with full cross-validation or on one held-out session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    CrossValidate,
    Session(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub heads: usize,
    pub dropout: f64,
    pub label_smoothing: f64,
    pub ua: Option<Summary>,
    pub accuracy: Option<Summary>,
    /// Set when the cell failed; the sweep carries on.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub mode: SweepMode,
    pub cells: Vec<SweepCell>,
}

fn run_cell(data: &Dataset, config: &TrainConfig, mode: SweepMode) -> SweepCell {
    let outcome = match mode {
        SweepMode::CrossValidate => cross_validate_in(data, config),
        SweepMode::Session(s) => single_fold(data, config, s),
    };
    let (ua, accuracy, error) = match outcome {
        Ok(r) => (Some(r.ua), Some(r.accuracy), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    SweepCell {
        heads: config.heads,
        dropout: config.dropout,
        label_smoothing: config.label_smoothing,
        ua,
        accuracy,
        error,
    }
}

/// Evaluates every grid cell. Each cell derives its seeds from the base
/// config only, so cell results do not depend on evaluation order.
pub fn sweep(
    data: &Dataset,
    base: &TrainConfig,
    grid: &SweepGrid,
    mode: SweepMode,
    threads: usize,
) -> Result<SweepResult> {
    let cells = grid.cells(base)?;
    let results = pool(threads)?.install(|| {
        cells
            .par_iter()
            .map(|cfg| run_cell(data, cfg, mode))
            .collect::<Vec<_>>()
    });
    Ok(SweepResult {
        axes: grid.axes().into_iter().map(String::from).collect(),
        mode,
        cells: results,
    })
}
