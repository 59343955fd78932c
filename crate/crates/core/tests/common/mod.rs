#![allow(dead_code)]

pub mod oracle;

use corrpool::attention::AttentionParams;
use corrpool::pooling::LayerStack;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

pub fn random_stack(r: &mut impl Rng, layers: usize, frames: usize, dim: usize) -> LayerStack {
    LayerStack::new(Array3::from_shape_fn((layers, frames, dim), |_| r.random_range(-1.0..1.0))).unwrap()
}

pub fn rows(m: &Array2<f64>) -> oracle::Matrix {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn oracle_attention(p: &AttentionParams) -> oracle::Attention {
    oracle::Attention {
        w_att: rows(&p.w_att),
        queries: rows(&p.queries),
        biases: p.biases.to_vec(),
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
