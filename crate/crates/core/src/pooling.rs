//! Utterance-level pooling: layer weighting followed by one of the four
//! frame-pooling methods (mean, mean-std, correlation, attentive correlation).
//!
//! Frame sequences are plain `T x d` matrices (`ArrayView2<f64>`). All
//! statistics are accumulated in `f64` whatever the storage precision of the
//! features was.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::attention::{attention_weights, AttentionParams};
use crate::error::{Error, Result};
use crate::numeric::{all_finite, is_simplex, softmax};

/// Default regularizer added to every entry of the correlation denominator.
pub const DEFAULT_EPSILON: f64 = 1e-8;

const SIMPLEX_TOL: f64 = 1e-9;

/// Frame features from every upstream layer of one utterance, laid out
/// `[layer][frame][dim]`. Layer 0 is the convolutional front-end output.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    values: Array3<f64>,
}

impl LayerStack {
    pub fn new(values: Array3<f64>) -> Result<Self> {
        let (layers, frames, dim) = values.dim();
        if layers == 0 || frames == 0 || dim == 0 {
            return Err(Error::input(format!(
                "layer stack must be nonempty, got {layers}x{frames}x{dim}"
            )));
        }
        if !all_finite(values.iter()) {
            return Err(Error::input("layer stack contains non-finite values"));
        }
        Ok(LayerStack { values })
    }

    pub fn n_layers(&self) -> usize {
        self.values.dim().0
    }

    pub fn frames(&self) -> usize {
        self.values.dim().1
    }

    pub fn dim(&self) -> usize {
        self.values.dim().2
    }

    pub fn view(&self) -> ArrayView3<'_, f64> {
        self.values.view()
    }

    pub fn layer(&self, l: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), l)
    }

    pub fn into_inner(self) -> Array3<f64> {
        self.values
    }
}

/// Trainable per-layer logits; the mixing weights are their softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub logits: Array1<f64>,
}

impl LayerWeights {
    /// Equal logits, i.e. a plain average over layers.
    pub fn uniform(n_layers: usize) -> Self {
        LayerWeights {
            logits: Array1::zeros(n_layers),
        }
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn gamma(&self) -> Array1<f64> {
        softmax(self.logits.view())
    }
}

/// Which frame-pooling method turns a sequence into an utterance embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMethod {
    Mean,
    #[serde(rename = "meanstd")]
    MeanStd,
    Corr,
    #[serde(rename = "attcorr")]
    AttCorr,
}

impl PoolingMethod {
    pub const ALL: [PoolingMethod; 4] = [
        PoolingMethod::Mean,
        PoolingMethod::MeanStd,
        PoolingMethod::Corr,
        PoolingMethod::AttCorr,
    ];

    /// Whether the method projects frames to `d_v` channels first.
    pub fn uses_projection(self) -> bool {
        matches!(self, PoolingMethod::Corr | PoolingMethod::AttCorr)
    }

    /// Embedding length for feature dimension `dim` and projected size `dv`.
    pub fn embedding_len(self, dim: usize, dv: usize) -> usize {
        match self {
            PoolingMethod::Mean => dim,
            PoolingMethod::MeanStd => 2 * dim,
            PoolingMethod::Corr | PoolingMethod::AttCorr => dv * dv.saturating_sub(1) / 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMethod::Mean => "mean",
            PoolingMethod::MeanStd => "meanstd",
            PoolingMethod::Corr => "corr",
            PoolingMethod::AttCorr => "attcorr",
        }
    }
}

impl fmt::Display for PoolingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(PoolingMethod::Mean),
            "meanstd" | "mean-std" | "mean_std" => Ok(PoolingMethod::MeanStd),
            "corr" | "correlation" => Ok(PoolingMethod::Corr),
            "attcorr" | "attentive-corr" | "attentive_corr" => Ok(PoolingMethod::AttCorr),
            other => Err(Error::config(format!("unknown pooling method '{other}'"))),
        }
    }
}

/// Fixed-size utterance embedding tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledEmbedding {
    pub method: PoolingMethod,
    pub values: Array1<f64>,
}

impl PooledEmbedding {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Symmetric matrix of channel correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: Array2<f64>,
    pub epsilon: f64,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.values.nrows()
    }
}

/// Weighted first and second moments of a frame sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStats {
    pub mean: Array1<f64>,
    pub cov: Array2<f64>,
}

fn check_sequence(seq: ArrayView2<'_, f64>) -> Result<()> {
    if seq.nrows() == 0 {
        return Err(Error::input("empty frame sequence"));
    }
    if seq.ncols() == 0 {
        return Err(Error::input("frame sequence has zero channels"));
    }
    Ok(())
}

/// Mixes all layers into one frame sequence with the softmax of the layer logits.
pub fn layer_pool(stack: &LayerStack, weights: &LayerWeights) -> Result<Array2<f64>> {
    if weights.len() != stack.n_layers() {
        return Err(Error::config(format!(
            "{} layer weights for a stack of {} layers",
            weights.len(),
            stack.n_layers()
        )));
    }
    let gamma = weights.gamma();
    let mut out = Array2::zeros((stack.frames(), stack.dim()));
    for (l, &g) in gamma.iter().enumerate() {
        out.scaled_add(g, &stack.layer(l));
    }
    Ok(out)
}

/// Per-channel arithmetic mean over frames.
pub fn mean_pool(seq: ArrayView2<'_, f64>) -> Result<PooledEmbedding> {
    check_sequence(seq)?;
    Ok(PooledEmbedding {
        method: PoolingMethod::Mean,
        values: channel_mean(seq),
    })
}

fn channel_mean(seq: ArrayView2<'_, f64>) -> Array1<f64> {
    let t = seq.nrows() as f64;
    seq.sum_axis(Axis(0)) / t
}

/// Per-channel population variance (1/T) around `mean`, clamped at zero.
pub(crate) fn channel_variance(seq: ArrayView2<'_, f64>, mean: ArrayView1<'_, f64>) -> Array1<f64> {
    let t = seq.nrows() as f64;
    let mut var = Array1::<f64>::zeros(seq.ncols());
    for row in seq.rows() {
        for ((acc, &x), &m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
            let c = x - m;
            *acc += c * c;
        }
    }
    var.mapv_inplace(|v| (v / t).max(0.0));
    var
}

/// Concatenation of the per-channel mean and population standard deviation.
pub fn mean_std_pool(seq: ArrayView2<'_, f64>) -> Result<PooledEmbedding> {
    check_sequence(seq)?;
    let mean = channel_mean(seq);
    let std = channel_variance(seq, mean.view()).mapv(f64::sqrt);
    let d = seq.ncols();
    let mut values = Array1::zeros(2 * d);
    values.slice_mut(ndarray::s![..d]).assign(&mean);
    values.slice_mut(ndarray::s![d..]).assign(&std);
    Ok(PooledEmbedding {
        method: PoolingMethod::MeanStd,
        values,
    })
}

/// Mean and covariance with per-frame weights `w` (a probability vector).
pub fn weighted_stats(seq: ArrayView2<'_, f64>, w: ArrayView1<'_, f64>) -> Result<WeightedStats> {
    check_sequence(seq)?;
    if w.len() != seq.nrows() {
        return Err(Error::input(format!(
            "{} frame weights for {} frames",
            w.len(),
            seq.nrows()
        )));
    }
    if !is_simplex(w, SIMPLEX_TOL) {
        return Err(Error::input("frame weights must be nonnegative and sum to 1"));
    }
    let dv = seq.ncols();
    let mean = seq.t().dot(&w);
    let mut cov = Array2::<f64>::zeros((dv, dv));
    let mut centered = Array1::<f64>::zeros(dv);
    for (row, &wt) in seq.rows().into_iter().zip(w.iter()) {
        if wt == 0.0 {
            continue;
        }
        centered.assign(&row);
        centered -= &mean;
        for i in 0..dv {
            let ci = wt * centered[i];
            for j in i..dv {
                cov[[i, j]] += ci * centered[j];
            }
        }
    }
    for i in 0..dv {
        for j in 0..i {
            cov[[i, j]] = cov[[j, i]];
        }
    }
    Ok(WeightedStats { mean, cov })
}

/// Uniform frame weights `1/T`.
pub fn uniform_weights(frames: usize) -> Array1<f64> {
    Array1::from_elem(frames, 1.0 / frames as f64)
}

/// Normalizes a covariance into correlations: `C = cov / (s s' + eps)` where
/// `s` holds the standard deviations and `eps` is added to every entry.
pub fn correlation(cov: ArrayView2<'_, f64>, eps: f64) -> Result<CorrelationMatrix> {
    let (rows, cols) = cov.dim();
    if rows != cols {
        return Err(Error::input(format!(
            "covariance must be square, got {rows}x{cols}"
        )));
    }
    let scale = cov.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..rows {
        for j in 0..i {
            if (cov[[i, j]] - cov[[j, i]]).abs() > 1e-8 * scale {
                return Err(Error::input(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let s = std_devs(cov);
    let mut values = Array2::zeros((rows, rows));
    for i in 0..rows {
        for j in 0..rows {
            values[[i, j]] = cov[[i, j]] / (s[i] * s[j] + eps);
        }
    }
    Ok(CorrelationMatrix {
        values,
        epsilon: eps,
    })
}

pub(crate) fn std_devs(cov: ArrayView2<'_, f64>) -> Array1<f64> {
    cov.diag().mapv(|v| v.max(0.0).sqrt())
}

/// Strictly-upper-triangular entries in row-major order (`i < j`, `i` then `j` ascending).
pub fn vectorize_upper(c: &CorrelationMatrix, method: PoolingMethod) -> PooledEmbedding {
    let n = c.size();
    let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            values.push(c.values[[i, j]]);
        }
    }
    PooledEmbedding {
        method,
        values: Array1::from(values),
    }
}

/// Correlation pooling with uniform frame weights.
pub fn corr_pool(seq: ArrayView2<'_, f64>, eps: f64) -> Result<PooledEmbedding> {
    check_sequence(seq)?;
    let stats = weighted_stats(seq, uniform_weights(seq.nrows()).view())?;
    let c = correlation(stats.cov.view(), eps)?;
    Ok(vectorize_upper(&c, PoolingMethod::Corr))
}

/// Correlation pooling with frame weights from the log-sum-exp multi-head attention.
pub fn attentive_corr_pool(
    seq: ArrayView2<'_, f64>,
    attn: &AttentionParams,
    eps: f64,
) -> Result<PooledEmbedding> {
    check_sequence(seq)?;
    let w = attention_weights(seq, attn)?;
    let stats = weighted_stats(seq, w.view())?;
    let c = correlation(stats.cov.view(), eps)?;
    Ok(vectorize_upper(&c, PoolingMethod::AttCorr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{naive, random_matrix, rng};
    use ndarray::{array, Array3};
    use proptest::prelude::*;
    use rand::Rng;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn equal_logits_average_layers() {
        let mut values = Array3::zeros((3, 4, 2));
        for l in 0..3 {
            values
                .index_axis_mut(Axis(0), l)
                .fill(3.0 * l as f64);
        }
        let stack = LayerStack::new(values).unwrap();
        let out = layer_pool(&stack, &LayerWeights::uniform(3)).unwrap();
        for v in out.iter() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_logit_selects_layer() {
        let mut r = rng(1);
        let stack = LayerStack::new(Array3::from_shape_fn((3, 4, 5), |_| r.random_range(-1.0..1.0)))
            .unwrap();
        let weights = LayerWeights {
            logits: array![0.0, 50.0, 0.0],
        };
        let out = layer_pool(&stack, &weights).unwrap();
        for (a, b) in out.iter().zip(stack.layer(1).iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn layer_pool_matches_triple_loop() {
        let mut r = rng(2);
        let raw: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| {
                (0..4)
                    .map(|_| (0..5).map(|_| r.random_range(-2.0..2.0)).collect())
                    .collect()
            })
            .collect();
        let logits: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let stack = LayerStack::new(Array3::from_shape_fn((3, 4, 5), |(l, t, i)| raw[l][t][i]))
            .unwrap();
        let out = layer_pool(
            &stack,
            &LayerWeights {
                logits: Array1::from(logits.clone()),
            },
        )
        .unwrap();
        let expected = naive::layer_pool(&raw, &logits);
        let flat: Vec<f64> = expected.into_iter().flatten().collect();
        assert!(max_abs_diff(out.as_slice().unwrap(), &flat) < 1e-12);
    }

    #[test]
    fn layer_weight_mismatch_is_config_error() {
        let stack = LayerStack::new(Array3::zeros((2, 3, 4))).unwrap();
        let err = layer_pool(&stack, &LayerWeights::uniform(3)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn mean_pool_examples() {
        let constant = Array2::from_elem((5, 3), 2.5);
        let m = mean_pool(constant.view()).unwrap();
        assert!(m.values.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        let two = array![[1.0], [3.0]];
        assert_eq!(mean_pool(two.view()).unwrap().values[0], 2.0);
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(matches!(mean_pool(empty.view()), Err(Error::Input(_))));
    }

    #[test]
    fn mean_pool_matches_oracle() {
        let mut r = rng(3);
        let seq = random_matrix(&mut r, 7, 6);
        let got = mean_pool(seq.view()).unwrap();
        let want = naive::mean(&naive::rows(&seq));
        assert!(max_abs_diff(got.values.as_slice().unwrap(), &want) < 1e-12);
    }

    #[test]
    fn mean_std_examples() {
        let constant = Array2::from_elem((4, 3), -1.0);
        let e = mean_std_pool(constant.view()).unwrap();
        assert_eq!(e.len(), 6);
        assert!(e.values.slice(ndarray::s![3..]).iter().all(|&v| v == 0.0));
        let two = array![[1.0], [3.0]];
        let e = mean_std_pool(two.view()).unwrap();
        assert_eq!(e.values.to_vec(), vec![2.0, 1.0]);
    }

    #[test]
    fn mean_std_matches_oracle() {
        let mut r = rng(4);
        let seq = random_matrix(&mut r, 9, 4);
        let got = mean_std_pool(seq.view()).unwrap();
        let want = naive::mean_std(&naive::rows(&seq));
        assert!(max_abs_diff(got.values.as_slice().unwrap(), &want) < 1e-10);
    }

    #[test]
    fn weighted_stats_examples() {
        let mut r = rng(5);
        let seq = random_matrix(&mut r, 6, 3);
        let uniform = weighted_stats(seq.view(), uniform_weights(6).view()).unwrap();
        let (mu, cov) = naive::unweighted_stats(&naive::rows(&seq));
        assert!(max_abs_diff(uniform.mean.as_slice().unwrap(), &mu) < 1e-12);
        let flat: Vec<f64> = cov.into_iter().flatten().collect();
        assert!(max_abs_diff(uniform.cov.as_slice().unwrap(), &flat) < 1e-12);

        let mut onehot = Array1::zeros(6);
        onehot[2] = 1.0;
        let s = weighted_stats(seq.view(), onehot.view()).unwrap();
        assert_eq!(s.mean, seq.row(2));
        assert!(s.cov.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_stats_matches_double_loop() {
        let mut r = rng(6);
        let seq = random_matrix(&mut r, 11, 8);
        let raw: Vec<f64> = (0..11).map(|_| r.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let got = weighted_stats(seq.view(), Array1::from(w.clone()).view()).unwrap();
        let (mu, cov) = naive::weighted_stats(&naive::rows(&seq), &w);
        assert!(max_abs_diff(got.mean.as_slice().unwrap(), &mu) < 1e-10);
        let flat: Vec<f64> = cov.into_iter().flatten().collect();
        assert!(max_abs_diff(got.cov.as_slice().unwrap(), &flat) < 1e-10);
    }

    #[test]
    fn weighted_stats_rejects_bad_weights() {
        let seq = Array2::<f64>::zeros((3, 2));
        assert!(weighted_stats(seq.view(), array![0.5, 0.5].view()).is_err());
        assert!(weighted_stats(seq.view(), array![0.5, 0.6, -0.1].view()).is_err());
        assert!(weighted_stats(seq.view(), array![0.5, 0.4, 0.0].view()).is_err());
    }

    #[test]
    fn correlation_of_identity() {
        let c = correlation(Array2::<f64>::eye(4).view(), DEFAULT_EPSILON).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 / (1.0 + DEFAULT_EPSILON) } else { 0.0 };
                assert!((c.values[[i, j]] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn correlation_with_dead_channel_is_finite() {
        let mut cov = array![[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 0.0]];
        cov[[2, 2]] = 0.0;
        let c = correlation(cov.view(), DEFAULT_EPSILON).unwrap();
        assert!(c.values.iter().all(|v| v.is_finite()));
        for k in 0..2 {
            assert_eq!(c.values[[2, k]], 0.0);
            assert_eq!(c.values[[k, 2]], 0.0);
        }
    }

    #[test]
    fn correlation_rejects_non_square() {
        assert!(correlation(Array2::<f64>::zeros((2, 3)).view(), 1e-8).is_err());
    }

    #[test]
    fn correlation_matches_elementwise_oracle() {
        let mut r = rng(7);
        let a = random_matrix(&mut r, 8, 8);
        let cov = a.t().dot(&a);
        let c = correlation(cov.view(), DEFAULT_EPSILON).unwrap();
        let want = naive::correlation(&naive::rows(&cov), DEFAULT_EPSILON);
        let flat: Vec<f64> = want.into_iter().flatten().collect();
        assert!(max_abs_diff(c.values.as_slice().unwrap(), &flat) < 1e-12);
    }

    #[test]
    fn vectorize_upper_order_and_length() {
        let c = CorrelationMatrix {
            values: array![[1.0, 0.1, 0.2], [0.1, 1.0, 0.3], [0.2, 0.3, 1.0]],
            epsilon: 0.0,
        };
        assert_eq!(
            vectorize_upper(&c, PoolingMethod::Corr).values.to_vec(),
            vec![0.1, 0.2, 0.3]
        );
        let c2 = CorrelationMatrix {
            values: array![[1.0, -0.4], [-0.4, 1.0]],
            epsilon: 0.0,
        };
        assert_eq!(vectorize_upper(&c2, PoolingMethod::Corr).values.to_vec(), vec![-0.4]);
        let big = CorrelationMatrix {
            values: Array2::eye(256),
            epsilon: 0.0,
        };
        assert_eq!(vectorize_upper(&big, PoolingMethod::Corr).len(), 32640);
        assert_eq!(PoolingMethod::Corr.embedding_len(1024, 256), 32640);
    }

    #[test]
    fn corr_pool_examples() {
        let constant = Array2::from_elem((10, 4), 0.7);
        let e = corr_pool(constant.view(), DEFAULT_EPSILON).unwrap();
        assert!(e.values.iter().all(|v| v.abs() < 1e-12));

        let mut r = rng(8);
        let mut seq = random_matrix(&mut r, 50, 3);
        for t in 0..50 {
            seq[[t, 1]] = 2.0 * seq[[t, 0]] + 0.5;
        }
        let e = corr_pool(seq.view(), DEFAULT_EPSILON).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn single_frame_gives_zero_correlation() {
        let seq = array![[1.0, 2.0, 3.0]];
        let e = corr_pool(seq.view(), DEFAULT_EPSILON).unwrap();
        assert_eq!(e.values.to_vec(), vec![0.0; 3]);
    }

    #[test]
    fn corr_pool_matches_composed_oracle() {
        let mut r = rng(9);
        let seq = random_matrix(&mut r, 20, 6);
        let got = corr_pool(seq.view(), DEFAULT_EPSILON).unwrap();
        let want = naive::corr_pool(&naive::rows(&seq), DEFAULT_EPSILON);
        assert!(max_abs_diff(got.values.as_slice().unwrap(), &want) < 1e-10);
    }

    #[test]
    fn zero_attention_reduces_to_corr_pool() {
        let mut r = rng(10);
        let seq = random_matrix(&mut r, 15, 5);
        let attn = AttentionParams::zeros(5, 3);
        let a = attentive_corr_pool(seq.view(), &attn, DEFAULT_EPSILON).unwrap();
        let c = corr_pool(seq.view(), DEFAULT_EPSILON).unwrap();
        assert!(max_abs_diff(a.values.as_slice().unwrap(), c.values.as_slice().unwrap()) < 1e-12);
    }

    #[test]
    fn saturated_attention_gives_near_zero_embedding() {
        let mut r = rng(11);
        let mut seq = random_matrix(&mut r, 12, 4).mapv(|v| v.abs() * 0.1);
        // frame 5 is the only one with a large first channel
        seq[[5, 0]] = 10.0;
        let mut attn = AttentionParams::zeros(4, 2);
        attn.w_att[[0, 0]] = 1.0;
        attn.queries[[0, 0]] = 100.0;
        let w = attention_weights(seq.view(), &attn).unwrap();
        assert!(w[5] > 1.0 - 1e-12);
        let e = attentive_corr_pool(seq.view(), &attn, DEFAULT_EPSILON).unwrap();
        assert!(e.values.iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn attentive_corr_matches_composed_oracle() {
        let mut r = rng(12);
        let seq = random_matrix(&mut r, 10, 5);
        let attn = AttentionParams::random(5, 3, &mut r);
        let got = attentive_corr_pool(seq.view(), &attn, DEFAULT_EPSILON).unwrap();
        let w = naive::attention_weights(&naive::rows(&seq), &naive::attention(&attn));
        let want = naive::weighted_corr_pool(&naive::rows(&seq), &w, DEFAULT_EPSILON);
        assert!(max_abs_diff(got.values.as_slice().unwrap(), &want) < 1e-10);
    }

    #[test]
    fn pooling_method_parses() {
        for m in PoolingMethod::ALL {
            assert_eq!(m.as_str().parse::<PoolingMethod>().unwrap(), m);
        }
        assert!("max".parse::<PoolingMethod>().is_err());
    }

    fn seq_strategy() -> impl Strategy<Value = Array2<f64>> {
        (2usize..12, 2usize..6).prop_flat_map(|(t, d)| {
            proptest::collection::vec(-5.0f64..5.0, t * d)
                .prop_map(move |v| Array2::from_shape_vec((t, d), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn layer_gamma_is_simplex(logits in proptest::collection::vec(-30.0f64..30.0, 1..10)) {
            let g = LayerWeights { logits: Array1::from(logits) }.gamma();
            prop_assert!(is_simplex(g.view(), 1e-9));
        }

        #[test]
        fn correlation_is_bounded_and_symmetric(seq in seq_strategy()) {
            let stats = weighted_stats(seq.view(), uniform_weights(seq.nrows()).view()).unwrap();
            let c = correlation(stats.cov.view(), DEFAULT_EPSILON).unwrap();
            let n = c.size();
            for i in 0..n {
                for j in 0..n {
                    let v = c.values[[i, j]];
                    prop_assert!(v.abs() <= 1.0 + 10.0 * DEFAULT_EPSILON);
                    prop_assert!((v - c.values[[j, i]]).abs() <= 1e-9);
                }
                if stats.cov[[i, i]] > 1e-3 {
                    prop_assert!(c.values[[i, i]] <= 1.0 && c.values[[i, i]] >= 1.0 - 1e-5);
                }
            }
        }

        #[test]
        fn correlation_is_scale_invariant(seq in seq_strategy(), k in 0.1f64..10.0) {
            let seq = seq * 20.0;
            let base = corr_pool(seq.view(), DEFAULT_EPSILON).unwrap();
            let scaled = corr_pool((&seq * k).view(), DEFAULT_EPSILON).unwrap();
            let stats = weighted_stats(seq.view(), uniform_weights(seq.nrows()).view()).unwrap();
            // eps shifts C by about eps / (s_i s_j), so both scales need s_i s_j >= 10
            let min_var = stats.cov.diag().iter().copied().fold(f64::INFINITY, f64::min);
            prop_assume!(min_var * k.min(1.0).powi(2) >= 10.0);
            for (a, b) in base.values.iter().zip(scaled.values.iter()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn frame_permutation_leaves_pools_unchanged(seq in seq_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut order: Vec<usize> = (0..seq.nrows()).collect();
            order.shuffle(&mut rng(seed));
            let permuted = seq.select(Axis(0), &order);
            let pairs = [
                (mean_pool(seq.view()).unwrap(), mean_pool(permuted.view()).unwrap()),
                (mean_std_pool(seq.view()).unwrap(), mean_std_pool(permuted.view()).unwrap()),
                (corr_pool(seq.view(), 1e-8).unwrap(), corr_pool(permuted.view(), 1e-8).unwrap()),
            ];
            // summation order changes with the permutation, so allow rounding
            for (a, b) in &pairs {
                for (x, y) in a.values.iter().zip(b.values.iter()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
            let attn = AttentionParams::random(seq.ncols(), 2, &mut rng(seed ^ 1));
            let a = attentive_corr_pool(seq.view(), &attn, 1e-8).unwrap();
            let b = attentive_corr_pool(permuted.view(), &attn, 1e-8).unwrap();
            for (x, y) in a.values.iter().zip(b.values.iter()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
