//! Dataset manifests: the ordered image ids shared by every layer, optional
//! model metadata, and one EMB1 file per (model, layer).
//!
//! ```json
//! {
//!   "image_ids": ["img0", "img1"],
//!   "models": [{"model_name": "vit", "architecture": "transformer",
//!               "objective": "supervised", "parameter_count_millions": 86.0,
//!               "pooling": "cls"}],
//!   "layers": [{"model_name": "vit", "layer_index": 0, "layer_count": 12,
//!               "path": "vit/layer_000.emb"}]
//! }
//! ```
//!
//! Layer paths are relative to the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use layerscope_core::{EmbeddingMatrix, LayerRef};
use serde::{Deserialize, Serialize};

use crate::embstore::{read_embeddings, read_header};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_name: String,
    #[serde(default)]
    pub architecture: String,
    #[serde(default)]
    pub objective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter_count_millions: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooling: Option<String>,
}

impl ModelInfo {
    pub fn named(name: &str) -> Self {
        Self {
            model_name: name.into(),
            architecture: String::new(),
            objective: String::new(),
            parameter_count_millions: None,
            pooling: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub model_name: String,
    pub layer_index: usize,
    pub layer_count: usize,
    /// As written in the manifest, relative to its directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub image_ids: Vec<String>,
    #[serde(default)]
    pub models: Vec<ModelInfo>,
    #[serde(default)]
    pub layers: Vec<LayerEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Manifest {
    pub fn new(base_dir: &Path, image_ids: Vec<String>) -> Self {
        Self { image_ids, models: Vec::new(), layers: Vec::new(), base_dir: base_dir.to_path_buf() }
    }

    /// Parses the manifest and checks every invariant, probing each layer
    /// file's header.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate(path)?;
        Ok(manifest)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let fail = |reason: String| Err(Error::Manifest { path: path.to_path_buf(), reason });
        let mut seen = BTreeSet::new();
        for id in &self.image_ids {
            if !seen.insert(id.as_str()) {
                return fail(format!("duplicate image id `{id}`"));
            }
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut slots = BTreeSet::new();
        for entry in &self.layers {
            if entry.layer_index >= entry.layer_count {
                return fail(format!(
                    "layer {} of `{}` is outside its layer count {}",
                    entry.layer_index, entry.model_name, entry.layer_count
                ));
            }
            if *counts.entry(&entry.model_name).or_insert(entry.layer_count) != entry.layer_count {
                return fail(format!("model `{}` lists inconsistent layer counts", entry.model_name));
            }
            if !slots.insert((entry.model_name.as_str(), entry.layer_index)) {
                return fail(format!("layer {} of `{}` is listed twice", entry.layer_index, entry.model_name));
            }
            let file = self.resolve(entry);
            if !file.is_file() {
                return fail(format!("missing layer file {}", file.display()));
            }
            let header = read_header(&file)?;
            if header.n != self.image_ids.len() {
                return fail(format!(
                    "{} holds {} points but the manifest lists {} image ids",
                    file.display(),
                    header.n,
                    self.image_ids.len()
                ));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, entry: &LayerEntry) -> PathBuf {
        self.base_dir.join(&entry.path)
    }

    pub fn n_images(&self) -> usize {
        self.image_ids.len()
    }

    /// Model names in order of first appearance among the layers.
    pub fn model_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for entry in &self.layers {
            if !names.contains(&entry.model_name) {
                names.push(entry.model_name.clone());
            }
        }
        names
    }

    /// Layers of one model sorted by layer index.
    pub fn layers_of(&self, model: &str) -> Result<Vec<&LayerEntry>> {
        let mut layers: Vec<&LayerEntry> = self.layers.iter().filter(|e| e.model_name == model).collect();
        if layers.is_empty() {
            return Err(Error::UnknownModel(model.into()));
        }
        layers.sort_by_key(|e| e.layer_index);
        Ok(layers)
    }

    pub fn load_layer(&self, entry: &LayerEntry) -> Result<EmbeddingMatrix> {
        let matrix = read_embeddings(&self.resolve(entry))?;
        let layer = LayerRef::new(entry.model_name.clone(), entry.layer_index, entry.layer_count)?;
        Ok(matrix.with_layer(layer))
    }

    pub fn load_model(&self, model: &str) -> Result<Vec<EmbeddingMatrix>> {
        self.layers_of(model)?.into_iter().map(|e| self.load_layer(e)).collect()
    }

    pub fn image_index(&self, id: &str) -> Result<usize> {
        self.image_ids.iter().position(|i| i == id).ok_or_else(|| Error::UnknownImage(id.into()))
    }
}
