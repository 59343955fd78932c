//! Feature files, manifests, label mapping, fold construction and the
//! synthetic dataset generator.

pub mod folds;
pub mod labels;
pub mod lsf;
pub mod manifest;
pub mod synth;

use rayon::prelude::*;

pub use folds::{fold_for_session, split_folds, Fold};
pub use labels::{map_label, MappedLabel, IEMOCAP_CLASSES};
pub use lsf::{load_feature_file, read_header, write_feature_file, FeatureFile, FeatureHeader};
pub use manifest::{Manifest, UtteranceRecord};
pub use synth::{synth_dataset, SynthConfig, SynthDataset};

use crate::error::Result;
use crate::pooling::LayerStack;

/// A manifest with every feature file loaded into memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub stacks: Vec<LayerStack>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(manifest: Manifest, stacks: Vec<LayerStack>) -> Result<Self> {
        if stacks.len() != manifest.records.len() {
            return Err(crate::Error::input(format!(
                "{} stacks for {} records",
                stacks.len(),
                manifest.records.len()
            )));
        }
        let labels = manifest.labels();
        Ok(Dataset {
            manifest,
            stacks,
            labels,
        })
    }

    pub fn load(manifest: Manifest) -> Result<Self> {
        let stacks = manifest
            .records
            .par_iter()
            .map(|r| load_feature_file(manifest.resolve(r)))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(manifest, stacks)
    }

    pub fn classes(&self) -> usize {
        self.manifest.class_names.len()
    }

    pub fn n_layers(&self) -> usize {
        self.stacks.first().map_or(0, LayerStack::n_layers)
    }

    pub fn dim(&self) -> usize {
        self.stacks.first().map_or(0, LayerStack::dim)
    }

    /// Fails unless every utterance has the same layer count and dimension.
    pub fn check_uniform(&self) -> Result<()> {
        let (l, d) = (self.n_layers(), self.dim());
        match self
            .stacks
            .iter()
            .zip(&self.manifest.records)
            .find(|(s, _)| s.n_layers() != l || s.dim() != d)
        {
            Some((s, r)) => Err(crate::Error::input(format!(
                "utterance '{}' is {}x{}, expected {l} layers of dim {d}",
                r.id,
                s.n_layers(),
                s.dim()
            ))),
            None => Ok(()),
        }
    }
}

impl From<SynthDataset> for Dataset {
    fn from(s: SynthDataset) -> Self {
        let labels = s.manifest.labels();
        Dataset {
            manifest: s.manifest,
            stacks: s.stacks,
            labels,
        }
    }
}
