use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Summary;
use super::train::{train_fold, FoldResult};
use crate::config::TrainConfig;
use crate::data::{fold_for_session, split_folds, Dataset};
use crate::error::{Error, Result};
use crate::pooling::PoolingMethod;

/// Per-fold results and their mean/population-std aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub pooling: PoolingMethod,
    pub ua: Summary,
    pub accuracy: Summary,
    pub folds: Vec<FoldResult>,
}

impl CvResult {
    pub fn from_folds(pooling: PoolingMethod, folds: Vec<FoldResult>) -> Self {
        let ua: Vec<f64> = folds.iter().map(|f| f.test_ua).collect();
        let acc: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
        CvResult {
            pooling,
            ua: Summary::of(&ua),
            accuracy: Summary::of(&acc),
            folds,
        }
    }
}

/// Thread pool for fold/cell parallelism; `threads == 1` is the reproducibility mode.
pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))
}

/// Leave-one-session-out cross-validation on the current rayon pool.
pub(crate) fn cross_validate_in(data: &Dataset, config: &TrainConfig) -> Result<CvResult> {
    config.validate()?;
    let folds = split_folds(&data.manifest, config.val_fraction, config.seed)?;
    let results = folds
        .par_iter()
        .map(|fold| train_fold(data, fold, config).map(|(_, r)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(CvResult::from_folds(config.pooling, results))
}

/// Runs one fold per session with up to `threads` folds in parallel. Folds
/// are independent and collected in session order, so results do not depend
/// on the thread count.
pub fn cross_validate(data: &Dataset, config: &TrainConfig, threads: usize) -> Result<CvResult> {
    pool(threads)?.install(|| cross_validate_in(data, config))
}

/// Trains and tests only the fold that holds out `session`.
pub fn single_fold(data: &Dataset, config: &TrainConfig, session: u32) -> Result<CvResult> {
    config.validate()?;
    let fold = fold_for_session(&data.manifest, session, config.val_fraction, config.seed)?;
    let (_, result) = train_fold(data, &fold, config)?;
    Ok(CvResult::from_folds(config.pooling, vec![result]))
}
