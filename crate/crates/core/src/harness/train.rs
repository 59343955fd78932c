use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy_from_confusion, confusion_matrix, ua_from_confusion};
use crate::config::TrainConfig;
use crate::data::{Dataset, Fold};
use crate::error::{Error, Result};
use crate::grad::{backward, optimizer_step, AdamConfig, OptimizerState, TrainItem};
use crate::head::{predict, smooth_index, HeadParams, HeadShape, SmoothedTarget};

// rng streams derived from one fold seed
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Outcome of training and testing on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// Held-out session.
    pub fold: u32,
    pub test_ua: f64,
    pub test_accuracy: f64,
    pub val_ua: f64,
    /// Epoch whose parameters were kept; 0 is the initialization.
    pub best_epoch: usize,
    /// `confusion[true][pred]` on the test session.
    pub confusion: Vec<Vec<u64>>,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Pure seed derivation from the master seed and a fold id (splitmix64).
pub fn derive_seed(master: u64, fold: u32) -> u64 {
    let mut z = master ^ (u64::from(fold).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn head_shape(data: &Dataset, config: &TrainConfig) -> HeadShape {
    HeadShape {
        method: config.pooling,
        n_layers: data.n_layers(),
        dim: data.dim(),
        dv: config.dv,
        heads: config.heads,
        classes: data.classes(),
    }
}

/// Eval-mode predictions for the given utterances.
pub fn predict_indices(params: &HeadParams, data: &Dataset, which: &[usize]) -> Result<Vec<usize>> {
    which
        .iter()
        .map(|&i| Ok(predict(params.logits(&data.stacks[i])?.view())))
        .collect()
}

/// Confusion matrix of `params` on the given utterances.
pub fn evaluate(params: &HeadParams, data: &Dataset, which: &[usize]) -> Result<Vec<Vec<u64>>> {
    let preds = predict_indices(params, data, which)?;
    let labels: Vec<usize> = which.iter().map(|&i| data.labels[i]).collect();
    confusion_matrix(&preds, &labels, data.classes())
}

/// Replaces a `fraction` of labels with a different class drawn uniformly.
fn corrupt_labels(labels: &mut [usize], classes: usize, fraction: f64, rng: &mut impl Rng) {
    if fraction <= 0.0 || classes < 2 {
        return;
    }
    let n_flip = (fraction * labels.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(rng);
    for &i in &order[..n_flip] {
        let shift = rng.random_range(1..classes);
        labels[i] = (labels[i] + shift) % classes;
    }
}

/// Trains on `fold.train`, keeps the parameters with the best validation UA
/// (earliest epoch on ties, initialization counted as epoch 0) and evaluates
/// them once on `fold.test`.
pub fn train_fold(
    data: &Dataset,
    fold: &Fold,
    config: &TrainConfig,
) -> Result<(HeadParams, FoldResult)> {
    config.validate()?;
    data.check_uniform()?;
    if fold.train.is_empty() || fold.val.is_empty() || fold.test.is_empty() {
        return Err(Error::config(format!(
            "fold {} needs nonempty train/val/test sets ({}/{}/{})",
            fold.session,
            fold.train.len(),
            fold.val.len(),
            fold.test.len()
        )));
    }
    let classes = data.classes();
    let seed = derive_seed(config.seed, fold.session);
    let mut params = HeadParams::init(head_shape(data, config), config.epsilon, &mut stream(seed, STREAM_INIT))?;
    let mut state = OptimizerState::new(&params, AdamConfig::from(config));
    let mut shuffle_rng = stream(seed, STREAM_SHUFFLE);
    let mut dropout_rng = stream(seed, STREAM_DROPOUT);

    let mut train_labels: Vec<usize> = fold.train.iter().map(|&i| data.labels[i]).collect();
    corrupt_labels(&mut train_labels, classes, config.label_noise, &mut stream(seed, STREAM_NOISE));
    let targets: Vec<SmoothedTarget> = train_labels
        .iter()
        .map(|&l| smooth_index(l, classes, config.label_smoothing))
        .collect::<Result<_>>()?;

    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_val = ua_from_confusion(&evaluate(&params, data, &fold.val)?)?;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..fold.train.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch) {
            let batch: Vec<TrainItem> = chunk
                .iter()
                .map(|&j| TrainItem {
                    stack: &data.stacks[fold.train[j]],
                    target: &targets[j],
                })
                .collect();
            let (loss, mut grads) = backward(&batch, &params, config, &mut dropout_rng)
                .map_err(|e| diverged(e, epoch, config))?;
            if let Some(clip) = config.grad_clip {
                grads.clip_global_norm(clip);
            }
            optimizer_step(&mut params, &grads, &mut state)?;
            loss_sum += loss * chunk.len() as f64;
        }
        epoch_losses.push(loss_sum / order.len() as f64);
        let val = ua_from_confusion(&evaluate(&params, data, &fold.val)?)?;
        if val > best_val {
            best_val = val;
            best_epoch = epoch;
            best = params.clone();
        }
    }

    let confusion = evaluate(&best, data, &fold.test)?;
    let result = FoldResult {
        fold: fold.session,
        test_ua: ua_from_confusion(&confusion)?,
        test_accuracy: accuracy_from_confusion(&confusion),
        val_ua: best_val,
        best_epoch,
        confusion,
        epoch_losses,
    };
    Ok((best, result))
}

fn diverged(err: Error, epoch: usize, config: &TrainConfig) -> Error {
    match err {
        Error::Training { stage, msg } => Error::Training {
            stage,
            msg: format!(
                "{msg} at epoch {epoch}; config {}",
                serde_json::to_string(config).unwrap_or_default()
            ),
        },
        other => other,
    }
}
