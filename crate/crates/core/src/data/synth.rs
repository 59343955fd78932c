//! Synthetic utterances whose class lives only in a channel-pair correlation.
//!
//! Every channel is unit-variance Gaussian noise with zero mean in every
//! class. For an utterance of class `k`, one contiguous segment covering
//! `segment_fraction` of the frames makes class `k`'s designated channel pair
//! strongly correlated. Means and variances are therefore identical across
//! classes and only second-order statistics separate them.

use std::fs;
use std::ops::Range;
use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lsf::write_feature_file;
use super::manifest::{Manifest, UtteranceRecord};
use crate::error::{Error, Result};
use crate::pooling::LayerStack;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub classes: usize,
    /// Utterances per class in each session.
    pub per_class: usize,
    pub sessions: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub dim: usize,
    pub n_layers: usize,
    pub segment_fraction: f64,
    /// Correlation of the designated pair inside the active segment.
    pub rho: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 4,
            per_class: 50,
            sessions: 5,
            t_min: 80,
            t_max: 120,
            dim: 16,
            n_layers: 3,
            segment_fraction: 0.5,
            rho: 0.95,
            seed: 0,
        }
    }
}

impl SynthConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let pairs = self.dim * self.dim.saturating_sub(1) / 2;
        if self.classes == 0 || self.classes > pairs {
            return Err(Error::config(format!(
                "{} classes need distinct channel pairs, d={} offers {pairs}",
                self.classes, self.dim
            )));
        }
        if self.per_class == 0 || self.sessions == 0 || self.n_layers == 0 {
            return Err(Error::config("per_class, sessions and n_layers must be positive"));
        }
        if self.t_min < 2 || self.t_min > self.t_max {
            return Err(Error::config(format!(
                "frame range [{}, {}] invalid (need 2 <= t_min <= t_max)",
                self.t_min, self.t_max
            )));
        }
        if !(self.segment_fraction > 0.0 && self.segment_fraction <= 1.0) {
            return Err(Error::config("segment_fraction must be in (0, 1]"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::config("rho must be in (-1, 1)"));
        }
        Ok(())
    }

    /// Channel pair carrying class `k`: disjoint pairs `(2k, 2k+1)` when they
    /// fit, otherwise the `k`-th pair in row-major upper-triangle order.
    pub fn pair_for_class(&self, k: usize) -> (usize, usize) {
        if 2 * self.classes <= self.dim {
            return (2 * k, 2 * k + 1);
        }
        let mut n = 0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if n == k {
                    return (i, j);
                }
                n += 1;
            }
        }
        unreachable!("class count validated against pair count")
    }

    pub fn class_name(k: usize) -> String {
        format!("class{k}")
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: Manifest,
    pub stacks: Vec<LayerStack>,
    /// Frames of each utterance where the designated pair is correlated.
    pub segments: Vec<Range<usize>>,
}

/// Clean (layer-0) frames of one utterance plus its active segment.
fn synth_frames(cfg: &SynthConfig, class: usize, rng: &mut impl Rng) -> (Array2<f64>, Range<usize>) {
    let frames = rng.random_range(cfg.t_min..=cfg.t_max);
    let seg_len = ((cfg.segment_fraction * frames as f64).round() as usize).clamp(2, frames);
    let start = rng.random_range(0..=frames - seg_len);
    let mut base = Array2::from_shape_simple_fn((frames, cfg.dim), || rng.sample::<f64, _>(StandardNormal));
    let (i, j) = cfg.pair_for_class(class);
    let mix = (1.0 - cfg.rho * cfg.rho).sqrt();
    for t in start..start + seg_len {
        base[[t, j]] = cfg.rho * base[[t, i]] + mix * base[[t, j]];
    }
    (base, start..start + seg_len)
}

pub fn synth_dataset(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut stacks = Vec::new();
    let mut segments = Vec::new();
    let mut n = 0u64;
    for session in 1..=cfg.sessions {
        for class in 0..cfg.classes {
            for i in 0..cfg.per_class {
                n += 1;
                // one stream per utterance keeps generation order-independent
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(n);
                let (base, segment) = synth_frames(cfg, class, &mut rng);
                let (frames, dim) = base.dim();
                let mut values = Array3::zeros((cfg.n_layers, frames, dim));
                for (l, mut layer) in values.axis_iter_mut(Axis(0)).enumerate() {
                    let noise = 0.5 * l as f64;
                    layer.assign(&base);
                    if noise > 0.0 {
                        layer.mapv_inplace(|v| v + noise * rng.sample::<f64, _>(StandardNormal));
                    }
                }
                stacks.push(LayerStack::new(values)?);
                segments.push(segment);
                let id = format!("utt_{n:04}");
                records.push(UtteranceRecord {
                    path: format!("{id}.lsf"),
                    id,
                    label: SynthConfig::class_name(class),
                    session: session as u32,
                    speaker: format!("S{session}{}", if i % 2 == 0 { "A" } else { "B" }),
                });
            }
        }
    }
    let classes = (0..cfg.classes).map(SynthConfig::class_name).collect();
    let manifest = Manifest::new(records, Some(classes), ".")?;
    Ok(SynthDataset {
        manifest,
        stacks,
        segments,
    })
}

impl SynthDataset {
    /// Writes every utterance as LSF1 plus `manifest.jsonl` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (record, stack) in self.manifest.records.iter().zip(&self.stacks) {
            write_feature_file(dir.join(&record.path), stack)?;
        }
        self.manifest.write(dir.join("manifest.jsonl"))
    }
}
