//! Naive reference implementations used as test oracles.
//!
//! Everything here works on nested `Vec`s with plain loops and the textbook
//! formulas (no max-subtraction, no shared helpers from the library) so that
//! it stays independent of the code paths under test.

#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

pub type Matrix = Vec<Vec<f64>>;

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn layer_pool(stack: &[Matrix], logits: &[f64]) -> Matrix {
    let g = softmax(logits);
    let t_len = stack[0].len();
    let d = stack[0][0].len();
    let mut out = vec![vec![0.0; d]; t_len];
    for t in 0..t_len {
        for i in 0..d {
            for l in 0..stack.len() {
                out[t][i] += g[l] * stack[l][t][i];
            }
        }
    }
    out
}

pub fn mean(seq: &Matrix) -> Vec<f64> {
    let d = seq[0].len();
    let mut m = vec![0.0; d];
    for row in seq {
        for i in 0..d {
            m[i] += row[i];
        }
    }
    m.iter().map(|v| v / seq.len() as f64).collect()
}

pub fn mean_std(seq: &Matrix) -> Vec<f64> {
    let m = mean(seq);
    let d = m.len();
    let mut var = vec![0.0; d];
    for row in seq {
        for i in 0..d {
            var[i] += (row[i] - m[i]) * (row[i] - m[i]);
        }
    }
    let mut out = m.clone();
    out.extend(var.iter().map(|v| (v / seq.len() as f64).sqrt()));
    out
}

pub fn unweighted_stats(seq: &Matrix) -> (Vec<f64>, Matrix) {
    let w = vec![1.0 / seq.len() as f64; seq.len()];
    weighted_stats(seq, &w)
}

pub fn weighted_stats(seq: &Matrix, w: &[f64]) -> (Vec<f64>, Matrix) {
    let d = seq[0].len();
    let mut mu = vec![0.0; d];
    for (t, row) in seq.iter().enumerate() {
        for i in 0..d {
            mu[i] += w[t] * row[i];
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            for (t, row) in seq.iter().enumerate() {
                cov[i][j] += w[t] * (row[i] - mu[i]) * (row[j] - mu[j]);
            }
        }
    }
    (mu, cov)
}

pub fn correlation(cov: &Matrix, eps: f64) -> Matrix {
    let n = cov.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            c[i][j] = cov[i][j] / (cov[i][i].sqrt() * cov[j][j].sqrt() + eps);
        }
    }
    c
}

pub fn upper(c: &Matrix) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..c.len() {
        for j in (i + 1)..c.len() {
            out.push(c[i][j]);
        }
    }
    out
}

pub fn corr_pool(seq: &Matrix, eps: f64) -> Vec<f64> {
    let (_, cov) = unweighted_stats(seq);
    upper(&correlation(&cov, eps))
}

pub fn weighted_corr_pool(seq: &Matrix, w: &[f64], eps: f64) -> Vec<f64> {
    let (_, cov) = weighted_stats(seq, w);
    upper(&correlation(&cov, eps))
}

/// Attention parameters as plain vectors: (W_att rows, head queries, head biases).
pub struct Attention {
    pub w_att: Matrix,
    pub queries: Matrix,
    pub biases: Vec<f64>,
}

/// Direct evaluation of the log-sum-exp attention, no stability tricks.
pub fn attention_weights(seq: &Matrix, p: &Attention) -> Vec<f64> {
    let d = seq[0].len();
    let mut a = Vec::with_capacity(seq.len());
    for v in seq {
        let mut o = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += p.w_att[i][j] * v[j];
            }
            o[i] = if acc > 0.0 { acc } else { 0.0 };
        }
        let mut total = 0.0;
        for (q, b) in p.queries.iter().zip(&p.biases) {
            let mut dot = *b;
            for i in 0..d {
                dot += q[i] * o[i];
            }
            total += dot.exp();
        }
        a.push(total.ln());
    }
    softmax(&a)
}

/// `x W + b` for a row vector `x` and an `in x out` matrix `W`.
pub fn affine(x: &[f64], w: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut out = b.to_vec();
    for (k, o) in out.iter_mut().enumerate() {
        for i in 0..x.len() {
            *o += x[i] * w[i][k];
        }
    }
    out
}

pub fn cross_entropy(logits: &[f64], target: &[f64]) -> f64 {
    let p = softmax(logits);
    -target.iter().zip(&p).map(|(t, q)| t * q.ln()).sum::<f64>()
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// One Adam update written out term by term.
pub fn adam_step(
    theta: f64,
    g: f64,
    m: f64,
    v: f64,
    step: i32,
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
) -> (f64, f64, f64) {
    let m1 = b1 * m + (1.0 - b1) * g;
    let v1 = b2 * v + (1.0 - b2) * g * g;
    let mhat = m1 / (1.0 - b1.powi(step));
    let vhat = v1 / (1.0 - b2.powi(step));
    (theta - lr * mhat / (vhat.sqrt() + eps), m1, v1)
}

/// Macro recall by explicit per-class counting.
pub fn unweighted_accuracy(preds: &[usize], labels: &[usize], k: usize) -> f64 {
    let mut recall_sum = 0.0;
    for c in 0..k {
        let mut hit = 0usize;
        let mut n = 0usize;
        for (p, l) in preds.iter().zip(labels) {
            if *l == c {
                n += 1;
                if p == l {
                    hit += 1;
                }
            }
        }
        recall_sum += hit as f64 / n as f64;
    }
    recall_sum / k as f64
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
