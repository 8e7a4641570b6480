//! Label files: JSON objects mapping image ids to labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// `{"img0": ["dog", "animal"], ...}`; every listed set must be non-empty.
pub fn load_label_sets(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
    raw.into_iter()
        .map(|(id, labels)| {
            if labels.is_empty() {
                return Err(Error::Labels { path: path.to_path_buf(), reason: format!("empty label set for `{id}`") });
            }
            Ok((id, labels.into_iter().collect()))
        })
        .collect()
}

/// `{"img0": "cat", ...}`: one class per image.
pub fn load_class_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })
}

pub fn save_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("labels serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
