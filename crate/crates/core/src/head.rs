//! Projection, channel dropout, the linear classifier, label smoothing and
//! the soft-target cross-entropy, plus the [`HeadParams`] bundle that ties a
//! full head together.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::attention::AttentionParams;
use crate::error::{Error, Result};
use crate::numeric::{argmax, log_softmax};
use crate::pooling::{
    attentive_corr_pool, corr_pool, layer_pool, mean_pool, mean_std_pool, LayerStack,
    LayerWeights, PooledEmbedding, PoolingMethod,
};

/// Affine map `x W + b` with `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    /// Fan-based uniform weights, zero bias.
    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let uniform = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        Linear {
            weight: Array2::from_shape_fn((input, output), |_| uniform.sample(rng)),
            bias: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn check(&self, input: usize) -> Result<()> {
        if self.bias.len() != self.output_dim() {
            return Err(Error::config("bias length does not match weight columns"));
        }
        if input != self.input_dim() {
            return Err(Error::config(format!(
                "input has {input} features, layer expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }
}

/// Applies `proj` to every frame of `seq`.
pub fn project(seq: ArrayView2<'_, f64>, proj: &Linear) -> Result<Array2<f64>> {
    proj.check(seq.ncols())?;
    let mut out = seq.dot(&proj.weight);
    out += &proj.bias;
    Ok(out)
}

/// Whether stochastic regularization is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-utterance channel mask: a dropped channel is zero at every frame,
/// kept channels are scaled by `1 / (1 - p_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub kept: Vec<bool>,
    pub scale: f64,
}

impl DropoutMask {
    pub fn identity(channels: usize) -> Self {
        DropoutMask {
            kept: vec![true; channels],
            scale: 1.0,
        }
    }

    pub fn draw(channels: usize, p_d: f64, mode: Mode, rng: &mut impl Rng) -> Result<Self> {
        check_dropout(p_d)?;
        if mode == Mode::Eval || p_d == 0.0 {
            return Ok(DropoutMask::identity(channels));
        }
        let kept = (0..channels).map(|_| rng.random::<f64>() >= p_d).collect();
        Ok(DropoutMask {
            kept,
            scale: 1.0 / (1.0 - p_d),
        })
    }

    /// Multiplier per channel (0 or `scale`).
    pub fn factors(&self) -> Array1<f64> {
        self.kept
            .iter()
            .map(|&k| if k { self.scale } else { 0.0 })
            .collect()
    }

    pub fn apply(&self, seq: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if seq.ncols() != self.kept.len() {
            return Err(Error::config(format!(
                "dropout mask has {} channels, sequence has {}",
                self.kept.len(),
                seq.ncols()
            )));
        }
        Ok(&seq * &self.factors())
    }
}

pub(crate) fn check_dropout(p_d: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p_d) {
        return Err(Error::config(format!("dropout probability {p_d} not in [0, 1)")));
    }
    Ok(())
}

/// Drops whole channels (across all frames) with probability `p_d` in train mode.
pub fn channel_dropout(
    seq: ArrayView2<'_, f64>,
    p_d: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    DropoutMask::draw(seq.ncols(), p_d, mode, rng)?.apply(seq)
}

/// A probability vector used as a soft training target.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTarget {
    pub probs: Array1<f64>,
}

/// Blends a one-hot target toward uniform: `y (1 - p_l) + p_l / K`.
pub fn smooth_labels(y: ArrayView1<'_, f64>, p_l: f64) -> Result<SmoothedTarget> {
    if !(0.0..=1.0).contains(&p_l) {
        return Err(Error::input(format!("label smoothing {p_l} not in [0, 1]")));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    let zeros = y.iter().filter(|&&v| v == 0.0).count();
    if y.is_empty() || ones != 1 || ones + zeros != y.len() {
        return Err(Error::input("target is not one-hot"));
    }
    let k = y.len() as f64;
    Ok(SmoothedTarget {
        probs: y.mapv(|v| v * (1.0 - p_l) + p_l / k),
    })
}

/// Smoothed target for class index `label` out of `classes`.
pub fn smooth_index(label: usize, classes: usize, p_l: f64) -> Result<SmoothedTarget> {
    if label >= classes {
        return Err(Error::input(format!("label {label} out of range for {classes} classes")));
    }
    let mut y = Array1::zeros(classes);
    y[label] = 1.0;
    smooth_labels(y.view(), p_l)
}

/// Linear classifier logits for one embedding.
pub fn classify(emb: &PooledEmbedding, classifier: &Linear) -> Result<Array1<f64>> {
    classifier.check(emb.len())?;
    Ok(emb.values.dot(&classifier.weight) + &classifier.bias)
}

pub fn predict(logits: ArrayView1<'_, f64>) -> usize {
    argmax(logits)
}

/// Cross-entropy of soft `target` against `softmax(logits)`.
pub fn ce_loss(logits: ArrayView1<'_, f64>, target: &SmoothedTarget) -> f64 {
    let logp = log_softmax(logits);
    -target
        .probs
        .iter()
        .zip(logp.iter())
        .filter(|(&t, _)| t != 0.0)
        .map(|(t, lp)| t * lp)
        .sum::<f64>()
}

/// Sizes that determine every parameter shape of a head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadShape {
    pub method: PoolingMethod,
    pub n_layers: usize,
    pub dim: usize,
    pub dv: usize,
    pub heads: usize,
    pub classes: usize,
}

impl HeadShape {
    pub fn embedding_len(&self) -> usize {
        self.method.embedding_len(self.dim, self.dv)
    }

    fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || self.dim == 0 || self.classes == 0 {
            return Err(Error::config(format!("degenerate head shape {self:?}")));
        }
        if self.method.uses_projection() && self.dv < 2 {
            return Err(Error::config("correlation pooling needs d_v >= 2"));
        }
        if self.method == PoolingMethod::AttCorr && self.heads == 0 {
            return Err(Error::config("attentive pooling needs at least one head"));
        }
        Ok(())
    }
}

/// Every trainable tensor of one classification head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub method: PoolingMethod,
    pub epsilon: f64,
    pub layer_weights: LayerWeights,
    /// Frame projection to `d_v` channels (correlation methods only).
    pub projection: Option<Linear>,
    /// Present only for attentive correlation pooling.
    pub attention: Option<AttentionParams>,
    pub classifier: Linear,
}

impl HeadParams {
    pub fn init(shape: HeadShape, epsilon: f64, rng: &mut impl Rng) -> Result<Self> {
        shape.validate()?;
        let projection = shape
            .method
            .uses_projection()
            .then(|| Linear::init(shape.dim, shape.dv, rng));
        let attention = (shape.method == PoolingMethod::AttCorr)
            .then(|| AttentionParams::init(shape.dv, shape.heads, rng));
        let classifier = Linear::init(shape.embedding_len(), shape.classes, rng);
        Ok(HeadParams {
            method: shape.method,
            epsilon,
            layer_weights: LayerWeights::uniform(shape.n_layers),
            projection,
            attention,
            classifier,
        })
    }

    pub fn classes(&self) -> usize {
        self.classifier.output_dim()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_weights.len()
    }

    pub fn input_dim(&self) -> usize {
        match &self.projection {
            Some(p) => p.input_dim(),
            None => match self.method {
                PoolingMethod::MeanStd => self.classifier.input_dim() / 2,
                _ => self.classifier.input_dim(),
            },
        }
    }

    /// Checks that the tensors fit together for the configured method.
    pub fn validate(&self) -> Result<()> {
        let method = self.method;
        match (&self.projection, method.uses_projection()) {
            (None, true) => return Err(Error::config(format!("{method} needs a projection"))),
            (Some(_), false) => {
                return Err(Error::config(format!("{method} does not use a projection")))
            }
            _ => {}
        }
        match (&self.attention, method == PoolingMethod::AttCorr) {
            (None, true) => return Err(Error::config("attcorr needs attention parameters")),
            (Some(_), false) => {
                return Err(Error::config(format!("{method} does not use attention")))
            }
            _ => {}
        }
        let dv = self.projection.as_ref().map_or(0, Linear::output_dim);
        if let Some(attn) = &self.attention {
            if attn.dv() != dv || attn.w_att.ncols() != dv || attn.queries.ncols() != dv {
                return Err(Error::config("attention size does not match d_v"));
            }
            if attn.heads() == 0 || attn.biases.len() != attn.heads() {
                return Err(Error::config("attention heads and biases disagree"));
            }
        }
        let want = method.embedding_len(self.input_dim(), dv);
        if self.classifier.input_dim() != want {
            return Err(Error::config(format!(
                "classifier expects {} inputs, {method} produces {want}",
                self.classifier.input_dim()
            )));
        }
        if self.classifier.bias.len() != self.classes() {
            return Err(Error::config("classifier bias length mismatch"));
        }
        Ok(())
    }

    /// Pools one utterance. `mask` applies channel dropout to the projected frames.
    pub fn embed(&self, stack: &LayerStack, mask: Option<&DropoutMask>) -> Result<PooledEmbedding> {
        let h = layer_pool(stack, &self.layer_weights)?;
        match self.method {
            PoolingMethod::Mean => mean_pool(h.view()),
            PoolingMethod::MeanStd => mean_std_pool(h.view()),
            PoolingMethod::Corr | PoolingMethod::AttCorr => {
                let proj = self.projection.as_ref().ok_or_else(|| {
                    Error::config(format!("{} needs a projection", self.method))
                })?;
                let mut v = project(h.view(), proj)?;
                if let Some(mask) = mask {
                    v = mask.apply(v.view())?;
                }
                match &self.attention {
                    Some(attn) if self.method == PoolingMethod::AttCorr => {
                        attentive_corr_pool(v.view(), attn, self.epsilon)
                    }
                    _ => corr_pool(v.view(), self.epsilon),
                }
            }
        }
    }

    /// Eval-mode logits for one utterance.
    pub fn logits(&self, stack: &LayerStack) -> Result<Array1<f64>> {
        classify(&self.embed(stack, None)?, &self.classifier)
    }

    /// Eval-mode logits for several utterances, one row each.
    pub fn logits_batch(&self, stacks: &[&LayerStack]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((stacks.len(), self.classes()));
        for (row, stack) in out.axis_iter_mut(Axis(0)).zip(stacks) {
            let logits = self.logits(stack)?;
            let mut row = row;
            row.assign(&logits);
        }
        Ok(out)
    }
}
