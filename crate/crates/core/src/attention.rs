//! Frame weights from multi-head attention whose heads are merged with
//! log-sum-exp before a single softmax over time.
//!
//! For each frame `o_t = relu(W_att v_t)`, each head scores `q_h' o_t + b_h`,
//! the per-frame score is `a_t = log sum_h exp(q_h' o_t + b_h)` and the
//! weights are `softmax(a_1..a_T)`. The same weights come out of a softmax
//! over all `H*T` head scores summed over heads; both routes are provided.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, softmax};

/// Trainable attention parameters: a square `d_v x d_v` map and `H` heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    pub w_att: Array2<f64>,
    /// One query per row, `H x d_v`.
    pub queries: Array2<f64>,
    pub biases: Array1<f64>,
}

impl AttentionParams {
    /// All-zero parameters; these produce uniform frame weights.
    pub fn zeros(dv: usize, heads: usize) -> Self {
        AttentionParams {
            w_att: Array2::zeros((dv, dv)),
            queries: Array2::zeros((heads, dv)),
            biases: Array1::zeros(heads),
        }
    }

    /// Training initialization: fan-based uniform `W_att`, `N(0, 1/sqrt(d_v))`
    /// queries, zero biases. Initial scores sit near `log H`, so training
    /// starts close to plain correlation pooling.
    pub fn init(dv: usize, heads: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (2.0 * dv as f64)).sqrt();
        let uniform = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let normal = Normal::new(0.0, 1.0 / (dv as f64).sqrt()).expect("positive std");
        AttentionParams {
            w_att: Array2::from_shape_fn((dv, dv), |_| uniform.sample(rng)),
            queries: Array2::from_shape_fn((heads, dv), |_| normal.sample(rng)),
            biases: Array1::zeros(heads),
        }
    }

    /// Unit-scale random parameters (including biases), handy for checks.
    pub fn random(dv: usize, heads: usize, rng: &mut impl Rng) -> Self {
        AttentionParams {
            w_att: Array2::from_shape_fn((dv, dv), |_| rng.random_range(-1.0..1.0)),
            queries: Array2::from_shape_fn((heads, dv), |_| rng.random_range(-1.0..1.0)),
            biases: Array1::from_shape_fn(heads, |_| rng.random_range(-1.0..1.0)),
        }
    }

    pub fn dv(&self) -> usize {
        self.w_att.nrows()
    }

    pub fn heads(&self) -> usize {
        self.queries.nrows()
    }

    fn check(&self, seq: ArrayView2<'_, f64>) -> Result<()> {
        let dv = self.dv();
        if self.w_att.ncols() != dv {
            return Err(Error::config("attention matrix must be square"));
        }
        if self.heads() == 0 {
            return Err(Error::config("attention needs at least one head"));
        }
        if self.queries.ncols() != dv || self.biases.len() != self.heads() {
            return Err(Error::config(format!(
                "attention heads sized {}x{} with {} biases for d_v={dv}",
                self.queries.nrows(),
                self.queries.ncols(),
                self.biases.len()
            )));
        }
        if seq.ncols() != dv {
            return Err(Error::config(format!(
                "sequence has {} channels, attention expects {dv}",
                seq.ncols()
            )));
        }
        if seq.nrows() == 0 {
            return Err(Error::input("empty frame sequence"));
        }
        Ok(())
    }
}

/// Intermediate values of one attention evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct AttentionTrace {
    /// `W_att v_t` before the ReLU, `T x d_v`.
    pub pre: Array2<f64>,
    /// `relu(pre)`.
    pub hidden: Array2<f64>,
    /// Softmax over heads of each frame's head scores, `T x H`.
    pub head_probs: Array2<f64>,
    pub weights: Array1<f64>,
}

pub(crate) fn attention_trace(
    seq: ArrayView2<'_, f64>,
    params: &AttentionParams,
) -> Result<AttentionTrace> {
    params.check(seq)?;
    let pre = seq.dot(&params.w_att.t());
    let hidden = pre.mapv(|v| v.max(0.0));
    let mut head_scores = hidden.dot(&params.queries.t());
    head_scores += &params.biases;

    let mut scores = Array1::zeros(seq.nrows());
    let mut head_probs = Array2::zeros(head_scores.raw_dim());
    for (t, row) in head_scores.rows().into_iter().enumerate() {
        scores[t] = log_sum_exp(row);
        head_probs.row_mut(t).assign(&softmax(row));
    }
    let weights = softmax(scores.view());
    Ok(AttentionTrace {
        pre,
        hidden,
        head_probs,
        weights,
    })
}

/// Frame weights via per-frame log-sum-exp over heads, then softmax over frames.
pub fn attention_weights(seq: ArrayView2<'_, f64>, params: &AttentionParams) -> Result<Array1<f64>> {
    Ok(attention_trace(seq, params)?.weights)
}

/// Frame weights via one softmax over all `H*T` head scores, summed over heads.
pub fn attention_weights_equiv(
    seq: ArrayView2<'_, f64>,
    params: &AttentionParams,
) -> Result<Array1<f64>> {
    params.check(seq)?;
    let hidden = seq.dot(&params.w_att.t()).mapv(|v| v.max(0.0));
    let mut head_scores = hidden.dot(&params.queries.t());
    head_scores += &params.biases;
    let (frames, heads) = head_scores.dim();
    // `dot` may hand back a column-major result; flatten in logical order
    let flat: Array1<f64> = head_scores.iter().copied().collect();
    let probs = Array2::from_shape_vec((frames, heads), softmax(flat.view()).to_vec())
        .map_err(|e| Error::config(e.to_string()))?;
    Ok(probs.sum_axis(Axis(1)))
}
