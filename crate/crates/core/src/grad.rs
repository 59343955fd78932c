//! Hand-derived reverse-mode gradients of the mean batch loss with respect to
//! every tensor in [`HeadParams`], and an Adam optimizer.
//!
//! The forward pass keeps a per-utterance [`Trace`] of the intermediates that
//! the backward pass needs. Each stage is differentiated exactly as written in
//! the forward code, including the `s s' + eps` denominator of the
//! correlation and the log-sum-exp head merge of the attention.

use std::fmt;

use ndarray::{Array1, Array2, ArrayD, ArrayViewD, ArrayViewMutD, Axis, IxDyn, Zip};
use rand::Rng;

use crate::attention::{attention_trace, AttentionTrace};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::head::{ce_loss, project, DropoutMask, HeadParams, Mode, SmoothedTarget};
use crate::numeric::{all_finite, softmax};
use crate::pooling::{
    channel_variance, correlation, layer_pool, std_devs, uniform_weights, weighted_stats,
    LayerStack, PoolingMethod,
};

/// Identifies one trainable tensor of a head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    LayerLogits,
    ProjWeight,
    ProjBias,
    AttWeight,
    AttQueries,
    AttBiases,
    ClsWeight,
    ClsBias,
}

impl ParamId {
    pub fn name(self) -> &'static str {
        match self {
            ParamId::LayerLogits => "layer_logits",
            ParamId::ProjWeight => "proj.weight",
            ParamId::ProjBias => "proj.bias",
            ParamId::AttWeight => "attn.w_att",
            ParamId::AttQueries => "attn.queries",
            ParamId::AttBiases => "attn.biases",
            ParamId::ClsWeight => "classifier.weight",
            ParamId::ClsBias => "classifier.bias",
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl HeadParams {
    /// Trainable tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(ParamId, ArrayViewD<'_, f64>)> {
        let mut out = vec![(ParamId::LayerLogits, self.layer_weights.logits.view().into_dyn())];
        if let Some(p) = &self.projection {
            out.push((ParamId::ProjWeight, p.weight.view().into_dyn()));
            out.push((ParamId::ProjBias, p.bias.view().into_dyn()));
        }
        if let Some(a) = &self.attention {
            out.push((ParamId::AttWeight, a.w_att.view().into_dyn()));
            out.push((ParamId::AttQueries, a.queries.view().into_dyn()));
            out.push((ParamId::AttBiases, a.biases.view().into_dyn()));
        }
        out.push((ParamId::ClsWeight, self.classifier.weight.view().into_dyn()));
        out.push((ParamId::ClsBias, self.classifier.bias.view().into_dyn()));
        out
    }

    /// Mutable trainable tensors, same order as [`HeadParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(ParamId, ArrayViewMutD<'_, f64>)> {
        let mut out = vec![(
            ParamId::LayerLogits,
            self.layer_weights.logits.view_mut().into_dyn(),
        )];
        if let Some(p) = &mut self.projection {
            out.push((ParamId::ProjWeight, p.weight.view_mut().into_dyn()));
            out.push((ParamId::ProjBias, p.bias.view_mut().into_dyn()));
        }
        if let Some(a) = &mut self.attention {
            out.push((ParamId::AttWeight, a.w_att.view_mut().into_dyn()));
            out.push((ParamId::AttQueries, a.queries.view_mut().into_dyn()));
            out.push((ParamId::AttBiases, a.biases.view_mut().into_dyn()));
        }
        out.push((
            ParamId::ClsWeight,
            self.classifier.weight.view_mut().into_dyn(),
        ));
        out.push((ParamId::ClsBias, self.classifier.bias.view_mut().into_dyn()));
        out
    }
}

/// One gradient tensor per trainable tensor, in [`HeadParams::tensors`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<(ParamId, ArrayD<f64>)>,
}

impl Gradients {
    pub fn zeros_like(params: &HeadParams) -> Self {
        Gradients {
            tensors: params
                .tensors()
                .into_iter()
                .map(|(id, t)| (id, ArrayD::zeros(t.raw_dim())))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&ArrayD<f64>> {
        self.tensors.iter().find(|(i, _)| *i == id).map(|(_, t)| t)
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let k = max_norm / norm;
            for (_, t) in &mut self.tensors {
                t.mapv_inplace(|v| v * k);
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|(_, t)| all_finite(t.iter()))
    }
}

/// One training example: an utterance and its (possibly smoothed) target.
#[derive(Debug, Clone, Copy)]
pub struct TrainItem<'a> {
    pub stack: &'a LayerStack,
    pub target: &'a SmoothedTarget,
}

#[derive(Debug)]
#[allow(clippy::large_enum_variant)] // one short-lived value per utterance
enum PoolTrace {
    Mean,
    MeanStd {
        mean: Array1<f64>,
        std: Array1<f64>,
    },
    Corr {
        /// Dropout multiplier per projected channel.
        factors: Array1<f64>,
        /// Projected frames after dropout.
        v: Array2<f64>,
        weights: Array1<f64>,
        mean: Array1<f64>,
        cov: Array2<f64>,
        std: Array1<f64>,
        attention: Option<AttentionTrace>,
    },
}

/// Forward intermediates for one utterance.
#[derive(Debug)]
struct Trace {
    gamma: Array1<f64>,
    h: Array2<f64>,
    pool: PoolTrace,
    emb: Array1<f64>,
    logits: Array1<f64>,
}

fn ensure_finite<'a>(
    stage: &'static str,
    values: impl Iterator<Item = &'a f64>,
) -> Result<()> {
    if all_finite(values) {
        Ok(())
    } else {
        Err(Error::Training {
            stage,
            msg: "non-finite values in forward pass".into(),
        })
    }
}

fn forward(stack: &LayerStack, params: &HeadParams, mask: &DropoutMask) -> Result<Trace> {
    let gamma = params.layer_weights.gamma();
    let h = layer_pool(stack, &params.layer_weights)?;
    ensure_finite("layer_pool", h.iter())?;
    let (pool, emb) = match params.method {
        PoolingMethod::Mean => {
            let t = h.nrows() as f64;
            (PoolTrace::Mean, h.sum_axis(Axis(0)) / t)
        }
        PoolingMethod::MeanStd => {
            let t = h.nrows() as f64;
            let mean = h.sum_axis(Axis(0)) / t;
            let std = channel_variance(h.view(), mean.view()).mapv(f64::sqrt);
            let mut emb = Array1::zeros(2 * mean.len());
            emb.slice_mut(ndarray::s![..mean.len()]).assign(&mean);
            emb.slice_mut(ndarray::s![mean.len()..]).assign(&std);
            (PoolTrace::MeanStd { mean, std }, emb)
        }
        PoolingMethod::Corr | PoolingMethod::AttCorr => {
            let proj = params
                .projection
                .as_ref()
                .ok_or_else(|| Error::config("correlation pooling needs a projection"))?;
            let projected = project(h.view(), proj)?;
            ensure_finite("project", projected.iter())?;
            let v = mask.apply(projected.view())?;
            let factors = mask.factors();
            let attention = match (&params.attention, params.method) {
                (Some(attn), PoolingMethod::AttCorr) => Some(attention_trace(v.view(), attn)?),
                (None, PoolingMethod::AttCorr) => {
                    return Err(Error::config("attcorr needs attention parameters"))
                }
                _ => None,
            };
            let weights = match &attention {
                Some(a) => {
                    ensure_finite("attention", a.weights.iter())?;
                    a.weights.clone()
                }
                None => uniform_weights(v.nrows()),
            };
            let stats = weighted_stats(v.view(), weights.view())?;
            ensure_finite("statistics", stats.cov.iter())?;
            let c = correlation(stats.cov.view(), params.epsilon)?;
            ensure_finite("correlation", c.values.iter())?;
            let dv = c.size();
            let mut emb = Vec::with_capacity(dv * (dv - 1) / 2);
            for i in 0..dv {
                for j in (i + 1)..dv {
                    emb.push(c.values[[i, j]]);
                }
            }
            let std = std_devs(stats.cov.view());
            (
                PoolTrace::Corr {
                    factors,
                    v,
                    weights,
                    mean: stats.mean,
                    cov: stats.cov,
                    std,
                    attention,
                },
                Array1::from(emb),
            )
        }
    };
    let logits = crate::head::classify(
        &crate::pooling::PooledEmbedding {
            method: params.method,
            values: emb.clone(),
        },
        &params.classifier,
    )?;
    ensure_finite("classify", logits.iter())?;
    Ok(Trace {
        gamma,
        h,
        pool,
        emb,
        logits,
    })
}

/// Gradient buffers with concrete shapes, packed into [`Gradients`] at the end.
struct Accum {
    layer_logits: Array1<f64>,
    proj_weight: Option<Array2<f64>>,
    proj_bias: Option<Array1<f64>>,
    att_weight: Option<Array2<f64>>,
    att_queries: Option<Array2<f64>>,
    att_biases: Option<Array1<f64>>,
    cls_weight: Array2<f64>,
    cls_bias: Array1<f64>,
}

impl Accum {
    fn new(params: &HeadParams) -> Self {
        Accum {
            layer_logits: Array1::zeros(params.layer_weights.len()),
            proj_weight: params.projection.as_ref().map(|p| Array2::zeros(p.weight.raw_dim())),
            proj_bias: params.projection.as_ref().map(|p| Array1::zeros(p.bias.len())),
            att_weight: params.attention.as_ref().map(|a| Array2::zeros(a.w_att.raw_dim())),
            att_queries: params.attention.as_ref().map(|a| Array2::zeros(a.queries.raw_dim())),
            att_biases: params.attention.as_ref().map(|a| Array1::zeros(a.biases.len())),
            cls_weight: Array2::zeros(params.classifier.weight.raw_dim()),
            cls_bias: Array1::zeros(params.classifier.bias.len()),
        }
    }

    fn into_gradients(self) -> Gradients {
        let mut tensors = vec![(ParamId::LayerLogits, self.layer_logits.into_dyn())];
        if let (Some(w), Some(b)) = (self.proj_weight, self.proj_bias) {
            tensors.push((ParamId::ProjWeight, w.into_dyn()));
            tensors.push((ParamId::ProjBias, b.into_dyn()));
        }
        if let (Some(w), Some(q), Some(b)) = (self.att_weight, self.att_queries, self.att_biases) {
            tensors.push((ParamId::AttWeight, w.into_dyn()));
            tensors.push((ParamId::AttQueries, q.into_dyn()));
            tensors.push((ParamId::AttBiases, b.into_dyn()));
        }
        tensors.push((ParamId::ClsWeight, self.cls_weight.into_dyn()));
        tensors.push((ParamId::ClsBias, self.cls_bias.into_dyn()));
        Gradients { tensors }
    }
}

fn outer_add(acc: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
    Zip::indexed(acc).for_each(|(i, j), v| *v += a[i] * b[j]);
}

/// Backpropagates `dlogits` through one utterance's trace into `acc`.
fn backward_one(
    stack: &LayerStack,
    params: &HeadParams,
    trace: &Trace,
    dlogits: &Array1<f64>,
    acc: &mut Accum,
) {
    outer_add(&mut acc.cls_weight, &trace.emb, dlogits);
    acc.cls_bias += dlogits;
    let demb = params.classifier.weight.dot(dlogits);

    let frames = trace.h.nrows();
    let t = frames as f64;
    let dh: Array2<f64> = match &trace.pool {
        PoolTrace::Mean => {
            let row = &demb / t;
            Array2::from_shape_fn(trace.h.raw_dim(), |(_, i)| row[i])
        }
        PoolTrace::MeanStd { mean, std } => {
            let d = mean.len();
            let dmean = demb.slice(ndarray::s![..d]).to_owned();
            // sqrt is clamped at zero variance; use the zero subgradient there
            let dvar: Array1<f64> = demb
                .slice(ndarray::s![d..])
                .iter()
                .zip(std.iter())
                .map(|(&g, &s)| if s > 0.0 { g / (2.0 * s) } else { 0.0 })
                .collect();
            Array2::from_shape_fn(trace.h.raw_dim(), |(f, i)| {
                dmean[i] / t + dvar[i] * 2.0 * (trace.h[[f, i]] - mean[i]) / t
            })
        }
        PoolTrace::Corr {
            factors,
            v,
            weights,
            mean,
            cov,
            std,
            attention,
        } => {
            let dv = std.len();
            // C_ij = cov_ij / (s_i s_j + eps) over the strictly upper triangle
            let mut dcov = Array2::<f64>::zeros((dv, dv));
            let mut dstd = Array1::<f64>::zeros(dv);
            let mut k = 0;
            for i in 0..dv {
                for j in (i + 1)..dv {
                    let g = demb[k];
                    k += 1;
                    let denom = std[i] * std[j] + params.epsilon;
                    dcov[[i, j]] += g / denom;
                    let ddenom = -g * cov[[i, j]] / (denom * denom);
                    dstd[i] += ddenom * std[j];
                    dstd[j] += ddenom * std[i];
                }
            }
            for i in 0..dv {
                if std[i] > 0.0 {
                    dcov[[i, i]] += dstd[i] / (2.0 * std[i]);
                }
            }

            // cov = sum_t w_t c_t c_t' with c_t = v_t - mu and sum_t w_t = 1
            let centered = v - mean;
            let sym = &dcov + &dcov.t();
            let mut dv_frames = centered.dot(&sym);
            for (mut row, &w) in dv_frames.axis_iter_mut(Axis(0)).zip(weights.iter()) {
                row *= w;
            }

            if let (Some(at), Some(attn)) = (attention, &params.attention) {
                // d cov / d w_t = c_t c_t'
                let dw: Array1<f64> = (&centered.dot(&dcov) * &centered).sum_axis(Axis(1));
                let mix = weights.dot(&dw);
                let dscore = weights * &(dw - mix);
                let mut dhead = at.head_probs.clone();
                for (mut row, &g) in dhead.axis_iter_mut(Axis(0)).zip(dscore.iter()) {
                    row *= g;
                }
                let aq = acc.att_queries.as_mut().expect("attention gradient buffer");
                *aq += &dhead.t().dot(&at.hidden);
                let ab = acc.att_biases.as_mut().expect("attention gradient buffer");
                *ab += &dhead.sum_axis(Axis(0));
                let mut dpre = dhead.dot(&attn.queries);
                Zip::from(&mut dpre)
                    .and(&at.pre)
                    .for_each(|g, &p| {
                        if p <= 0.0 {
                            *g = 0.0;
                        }
                    });
                let aw = acc.att_weight.as_mut().expect("attention gradient buffer");
                *aw += &dpre.t().dot(v);
                dv_frames += &dpre.dot(&attn.w_att);
            }

            let dprojected = &dv_frames * factors;
            let proj = params.projection.as_ref().expect("projection present in trace");
            let pw = acc.proj_weight.as_mut().expect("projection gradient buffer");
            *pw += &trace.h.t().dot(&dprojected);
            let pb = acc.proj_bias.as_mut().expect("projection gradient buffer");
            *pb += &dprojected.sum_axis(Axis(0));
            dprojected.dot(&proj.weight.t())
        }
    };

    let dgamma: Array1<f64> = (0..stack.n_layers())
        .map(|l| (&stack.layer(l) * &dh).sum())
        .collect();
    let mix = trace.gamma.dot(&dgamma);
    acc.layer_logits += &(&trace.gamma * &(dgamma - mix));
}

fn check_batch(batch: &[TrainItem<'_>], masks: &[DropoutMask]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::input("empty batch"));
    }
    if masks.len() != batch.len() {
        return Err(Error::config(format!(
            "{} dropout masks for {} utterances",
            masks.len(),
            batch.len()
        )));
    }
    Ok(())
}

/// Draws one channel-dropout mask per utterance (identity for methods without projection).
pub fn draw_masks(
    batch: &[TrainItem<'_>],
    params: &HeadParams,
    p_d: f64,
    rng: &mut impl Rng,
) -> Result<Vec<DropoutMask>> {
    match &params.projection {
        Some(p) => batch
            .iter()
            .map(|_| DropoutMask::draw(p.output_dim(), p_d, Mode::Train, rng))
            .collect(),
        None => {
            crate::head::check_dropout(p_d)?;
            Ok(batch.iter().map(|_| DropoutMask::identity(0)).collect())
        }
    }
}

/// Mean loss over the batch with fixed dropout masks.
pub fn batch_loss(
    batch: &[TrainItem<'_>],
    params: &HeadParams,
    masks: &[DropoutMask],
) -> Result<f64> {
    check_batch(batch, masks)?;
    let mut total = 0.0;
    for (item, mask) in batch.iter().zip(masks) {
        let trace = forward(item.stack, params, mask)?;
        total += ce_loss(trace.logits.view(), item.target);
    }
    let loss = total / batch.len() as f64;
    ensure_finite("loss", std::iter::once(&loss))?;
    Ok(loss)
}

/// Mean batch loss and its exact gradient, with fixed dropout masks.
pub fn loss_and_gradients(
    batch: &[TrainItem<'_>],
    params: &HeadParams,
    masks: &[DropoutMask],
) -> Result<(f64, Gradients)> {
    check_batch(batch, masks)?;
    params.validate()?;
    let scale = 1.0 / batch.len() as f64;
    let mut acc = Accum::new(params);
    let mut total = 0.0;
    for (item, mask) in batch.iter().zip(masks) {
        if item.target.probs.len() != params.classes() {
            return Err(Error::config(format!(
                "target has {} classes, head has {}",
                item.target.probs.len(),
                params.classes()
            )));
        }
        let trace = forward(item.stack, params, mask)?;
        total += ce_loss(trace.logits.view(), item.target);
        let dlogits = (softmax(trace.logits.view()) - &item.target.probs) * scale;
        backward_one(item.stack, params, &trace, &dlogits, &mut acc);
    }
    let loss = total * scale;
    ensure_finite("loss", std::iter::once(&loss))?;
    let grads = acc.into_gradients();
    if !grads.is_finite() {
        return Err(Error::Training {
            stage: "backward",
            msg: "non-finite gradient".into(),
        });
    }
    Ok((loss, grads))
}

/// Draws dropout masks from `rng`, then returns the mean batch loss and its gradient.
pub fn backward(
    batch: &[TrainItem<'_>],
    params: &HeadParams,
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<(f64, Gradients)> {
    let masks = draw_masks(batch, params, config.dropout, rng)?;
    loss_and_gradients(batch, params, &masks)
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl From<&TrainConfig> for AdamConfig {
    fn from(c: &TrainConfig) -> Self {
        AdamConfig {
            lr: c.lr,
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.adam_eps,
        }
    }
}

/// First/second moment estimates per tensor plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<ArrayD<f64>>,
    second: Vec<ArrayD<f64>>,
}

impl OptimizerState {
    pub fn new(params: &HeadParams, config: AdamConfig) -> Self {
        let zeros: Vec<ArrayD<f64>> = params
            .tensors()
            .into_iter()
            .map(|(_, t)| ArrayD::zeros(t.raw_dim()))
            .collect();
        OptimizerState {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }
}

/// One bias-corrected Adam update of every tensor.
pub fn optimizer_step(
    params: &mut HeadParams,
    grads: &Gradients,
    state: &mut OptimizerState,
) -> Result<()> {
    let tensors = params.tensors_mut();
    if tensors.len() != grads.tensors.len() || tensors.len() != state.first.len() {
        return Err(Error::config("gradient/optimizer layout does not match parameters"));
    }
    for ((id, t), (gid, g)) in tensors.iter().zip(&grads.tensors) {
        if id != gid || t.shape() != g.shape() {
            return Err(Error::config(format!("gradient for {gid} does not match {id}")));
        }
    }
    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let step = i32::try_from(state.step).unwrap_or(i32::MAX);
    let c1 = 1.0 - beta1.powi(step);
    let c2 = 1.0 - beta2.powi(step);
    for (((_, mut theta), (_, g)), (m, v)) in tensors
        .into_iter()
        .zip(&grads.tensors)
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
    {
        Zip::from(&mut theta)
            .and(g)
            .and(m)
            .and(v)
            .for_each(|theta, &g, m, v| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let mhat = *m / c1;
                let vhat = *v / c2;
                *theta -= lr * mhat / (vhat.sqrt() + eps);
            });
    }
    Ok(())
}

/// Result of comparing analytic gradients with central finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest relative error per tensor.
    pub per_tensor: Vec<(ParamId, f64)>,
    pub max_rel_error: f64,
    pub entries_checked: usize,
}

/// Relative error with a floor on the denominator so that entries that are
/// both essentially zero do not blow up.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Checks every entry of every trainable tensor against a central difference
/// of [`batch_loss`] with step `h`, using the same dropout masks throughout.
pub fn check_gradients(
    batch: &[TrainItem<'_>],
    params: &HeadParams,
    masks: &[DropoutMask],
    h: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_gradients(batch, params, masks)?;
    let mut probe = params.clone();
    let mut per_tensor = Vec::new();
    let mut entries = 0;
    let ids: Vec<(ParamId, usize)> = params.tensors().iter().map(|(id, t)| (*id, t.len())).collect();
    for (slot, (id, len)) in ids.into_iter().enumerate() {
        let analytic = &grads.tensors[slot].1;
        let mut worst = 0.0f64;
        for flat in 0..len {
            let index = unravel(analytic.shape(), flat);
            let original = tensor_entry(&mut probe, slot, &index, None);
            tensor_entry(&mut probe, slot, &index, Some(original + h));
            let up = batch_loss(batch, &probe, masks)?;
            tensor_entry(&mut probe, slot, &index, Some(original - h));
            let down = batch_loss(batch, &probe, masks)?;
            tensor_entry(&mut probe, slot, &index, Some(original));
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(analytic[index.as_slice()], numeric, floor));
            entries += 1;
        }
        per_tensor.push((id, worst));
    }
    let max_rel_error = per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradCheckReport {
        per_tensor,
        max_rel_error,
        entries_checked: entries,
    })
}

fn unravel(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut index = vec![0; shape.len()];
    for (axis, &n) in shape.iter().enumerate().rev() {
        index[axis] = flat % n;
        flat /= n;
    }
    index
}

/// Reads one entry of tensor `slot`, optionally overwriting it first.
fn tensor_entry(params: &mut HeadParams, slot: usize, index: &[usize], set: Option<f64>) -> f64 {
    let mut tensors = params.tensors_mut();
    let entry = &mut tensors[slot].1[IxDyn(index)];
    if let Some(v) = set {
        *entry = v;
    }
    *entry
}
