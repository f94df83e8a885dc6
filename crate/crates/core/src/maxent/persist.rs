//! JSON model files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LabelSet, Model, TrainConfig, Trace};
use crate::corpus::BioLabel;
use crate::error::{Error, Result};
use crate::features::{Extractor, FeatureInterner, FEATURE_INVENTORY_VERSION};

const FORMAT: &str = "mdal-maxent";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    feature_inventory: String,
    extractor: Extractor,
    config: TrainConfig,
    labels: Vec<String>,
    features: Vec<String>,
    /// Feature-major, `features.len() * labels.len()` entries.
    weights: Vec<f64>,
}

impl Model {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            feature_inventory: FEATURE_INVENTORY_VERSION.into(),
            extractor: self.extractor,
            config: self.config,
            labels: self.labels.labels().iter().map(ToString::to_string).collect(),
            features: self.interner.names().to_vec(),
            weights: self.weights.clone(),
        };
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer(&mut w, &file).map_err(|e| Error::Model(e.to_string()))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Load a saved model, rejecting files written by a different feature
    /// inventory.
    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if file.format != FORMAT || file.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format {} v{}",
                file.format, file.format_version
            )));
        }
        if file.feature_inventory != FEATURE_INVENTORY_VERSION {
            return Err(Error::Model(format!(
                "model was trained with feature inventory `{}`, this build extracts `{}`",
                file.feature_inventory, FEATURE_INVENTORY_VERSION
            )));
        }
        let labels = file
            .labels
            .iter()
            .map(|s| s.parse::<BioLabel>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Model(e.to_string()))?;
        let labels = Arc::new(LabelSet::from_labels(labels)?);
        let interner = Arc::new(FeatureInterner::from_names(file.features)?);
        Model::from_parts(file.weights, labels, interner, file.extractor, file.config, Trace::default())
    }
}
