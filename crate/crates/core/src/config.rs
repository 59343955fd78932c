use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pooling::{PoolingMethod, DEFAULT_EPSILON};

/// Every hyperparameter of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub pooling: PoolingMethod,
    /// Projected channel count for the correlation methods.
    pub dv: usize,
    /// Attention heads (attentive correlation only).
    pub heads: usize,
    /// Channel dropout probability `p_d`.
    pub dropout: f64,
    /// Label smoothing mass `p_l`.
    pub label_smoothing: f64,
    pub epsilon: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Clip gradients to this global L2 norm when set.
    pub grad_clip: Option<f64>,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Fraction of non-test utterances held out for model selection.
    pub val_fraction: f64,
    /// Fraction of training labels replaced by a different random class.
    pub label_noise: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pooling: PoolingMethod::AttCorr,
            dv: 256,
            heads: 4,
            dropout: 0.25,
            label_smoothing: 0.25,
            epsilon: DEFAULT_EPSILON,
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            grad_clip: None,
            epochs: 30,
            batch: 16,
            seed: 0,
            val_fraction: 0.1,
            label_noise: 0.0,
        }
    }
}

impl TrainConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} not in [0, 1)", self.dropout));
        }
        if !(0.0..=1.0).contains(&self.label_smoothing) {
            return bad(format!(
                "label smoothing {} not in [0, 1]",
                self.label_smoothing
            ));
        }
        if self.heads < 1 {
            return bad("heads must be at least 1".into());
        }
        if self.dv < 2 {
            return bad(format!("dv {} must be at least 2", self.dv));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must be in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam epsilon must be positive".into());
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return bad(format!("gradient clip {c} must be positive"));
            }
        }
        if self.batch == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!("validation fraction {} not in [0, 1)", self.val_fraction));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return bad(format!("label noise {} not in [0, 1)", self.label_noise));
        }
        Ok(())
    }
}
