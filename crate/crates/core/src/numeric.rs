//! Small numerically careful helpers shared by the pooling, head and grad code.

use ndarray::{Array1, ArrayView1};

/// `log(sum(exp(x)))` with max subtraction. Returns `-inf` for an empty slice.
pub fn log_sum_exp(x: ArrayView1<'_, f64>) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(x: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = x.mapv(|v| (v - max).exp());
    let total = out.sum();
    out /= total;
    out
}

pub fn log_softmax(x: ArrayView1<'_, f64>) -> Array1<f64> {
    let lse = log_sum_exp(x);
    x.mapv(|v| v - lse)
}

/// Index of the largest entry; first one wins on ties.
pub fn argmax(x: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Checks that `w` is a probability vector: nonnegative and summing to one within `tol`.
pub fn is_simplex(w: ArrayView1<'_, f64>, tol: f64) -> bool {
    w.iter().all(|&v| v >= 0.0 && v.is_finite()) && (w.sum() - 1.0).abs() <= tol
}

pub fn all_finite<'a>(mut values: impl Iterator<Item = &'a f64>) -> bool {
    values.all(|v| v.is_finite())
}
