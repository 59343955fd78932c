//! Test helpers for unit tests; the oracles themselves live under `tests/common`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attention::AttentionParams;

#[path = "../tests/common/oracle.rs"]
pub mod naive_impl;

pub mod naive {
    pub use super::naive_impl::*;
    use ndarray::Array2;

    pub fn rows(m: &Array2<f64>) -> Matrix {
        m.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn attention(p: &crate::attention::AttentionParams) -> Attention {
        Attention {
            w_att: rows(&p.w_att),
            queries: rows(&p.queries),
            biases: p.biases.to_vec(),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

#[allow(dead_code)]
pub fn random_attention(rng: &mut impl Rng, dv: usize, heads: usize) -> AttentionParams {
    AttentionParams::random(dv, heads, rng)
}
