//! Trained head plus the metadata needed to apply it later (`model.json`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::head::{predict, HeadParams};
use crate::pooling::LayerStack;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub class_names: Vec<String>,
    pub config: TrainConfig,
    pub params: HeadParams,
}

impl SavedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::report::write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SavedModel = serde_json::from_str(&text)?;
        model.params.validate()?;
        if model.class_names.len() != model.params.classes() {
            return Err(Error::config(format!(
                "{} class names for a {}-class head",
                model.class_names.len(),
                model.params.classes()
            )));
        }
        Ok(model)
    }

    /// Predicted class name for one utterance.
    pub fn classify(&self, stack: &LayerStack) -> Result<&str> {
        let logits = self.params.logits(stack)?;
        Ok(&self.class_names[predict(logits.view())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::head::HeadShape;
    use crate::pooling::PoolingMethod;
    use crate::testutil::rng;

    #[test]
    fn save_load_round_trip() {
        let params = HeadParams::init(
            HeadShape {
                method: PoolingMethod::AttCorr,
                n_layers: 2,
                dim: 6,
                dv: 3,
                heads: 2,
                classes: 2,
            },
            1e-8,
            &mut rng(1),
        )
        .unwrap();
        let model = SavedModel {
            class_names: vec!["x".into(), "y".into()],
            config: TrainConfig::default(),
            params,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        assert_eq!(SavedModel::load(&path).unwrap(), model);

        let mut broken = model.clone();
        broken.class_names.pop();
        broken.save(&path).unwrap();
        assert!(SavedModel::load(&path).is_err());
    }
}
