//! Analyses driven by a manifest: load the layers involved, line up image
//! ids, and hand the matrices to the core routines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use layerscope_core::coherence::{coherence_curve, CoherenceOptions, CoherencePoint, LabelIndex};
use layerscope_core::imbalance::{layer_grid, subsample_std, AnchorRule, ImbalanceGrid, SubsampleStat};
use layerscope_core::knn::{k_nearest_many, NeighborhoodSpec};
use layerscope_core::lowlevel::{
    discretize, profile, CannyParams, CategoryAssignment, CategoryTable, LowLevelProfile, Property,
};
use layerscope_core::probes::{class_trajectory, multiclass_trajectory, ProbeHyperparams, Trajectory};
use layerscope_core::{EmbeddingMatrix, Metric};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::pnm::decode_image;

/// `n` when given (and no larger than the population), otherwise the smaller
/// of `default` and the population.
pub fn resolve_sample_size(requested: Option<usize>, default: usize, population: usize) -> Result<usize> {
    match requested {
        Some(n) if n > population => {
            Err(layerscope_core::Error::SampleTooLarge { requested: n, available: population }.into())
        }
        Some(n) => Ok(n),
        None => Ok(default.min(population)),
    }
}

pub fn imbalance_grid(
    manifest: &Manifest,
    model_a: &str,
    model_b: &str,
    anchors: &AnchorRule,
    n: usize,
    seed: u64,
    metric: Metric,
) -> Result<ImbalanceGrid> {
    let stack_a = manifest.load_model(model_a)?;
    let stack_b = manifest.load_model(model_b)?;
    Ok(layer_grid(&stack_a, &stack_b, anchors, n, seed, metric)?)
}

fn layer_by_index(manifest: &Manifest, model: &str, layer_index: usize) -> Result<EmbeddingMatrix> {
    let entry = manifest
        .layers_of(model)?
        .into_iter()
        .find(|e| e.layer_index == layer_index)
        .ok_or_else(|| Error::Data(format!("model `{model}` has no layer {layer_index}")))?;
    manifest.load_layer(entry)
}

pub fn subsample(
    manifest: &Manifest,
    a: (&str, usize),
    b: (&str, usize),
    sizes: &[usize],
    trials: usize,
    metric: Metric,
    seed: u64,
) -> Result<Vec<SubsampleStat>> {
    let la = layer_by_index(manifest, a.0, a.1)?;
    let lb = layer_by_index(manifest, b.0, b.1)?;
    Ok(subsample_std(&la, &lb, sizes, trials, metric, seed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborEntry {
    pub id: String,
    pub rank: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerNeighbors {
    pub model: String,
    pub layer_index: usize,
    pub layer_count: usize,
    pub depth_fraction: f64,
    pub neighbors: Vec<NeighborEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryNeighbors {
    pub query: String,
    pub layers: Vec<LayerNeighbors>,
}

/// The `k` nearest images of each query, per model and anchor layer.
pub fn neighbor_report(
    manifest: &Manifest,
    queries: &[String],
    models: &[String],
    layers: &AnchorRule,
    spec: NeighborhoodSpec,
    metric: Metric,
) -> Result<Vec<QueryNeighbors>> {
    let rows: Vec<usize> = queries.iter().map(|q| manifest.image_index(q)).collect::<Result<_>>()?;
    let mut out: Vec<QueryNeighbors> =
        queries.iter().map(|q| QueryNeighbors { query: q.clone(), layers: Vec::new() }).collect();
    for model in models {
        let entries = manifest.layers_of(model)?;
        for pos in layers.select(entries.len())? {
            let matrix = manifest.load_layer(entries[pos])?;
            let lists = k_nearest_many(&matrix, &rows, spec, metric)?;
            for (report, list) in out.iter_mut().zip(lists) {
                report.layers.push(LayerNeighbors {
                    model: model.clone(),
                    layer_index: matrix.layer().layer_index(),
                    layer_count: matrix.layer().layer_count(),
                    depth_fraction: matrix.layer().depth_fraction(),
                    neighbors: list
                        .iter()
                        .enumerate()
                        .map(|(r, nb)| NeighborEntry {
                            id: manifest.image_ids[nb.index].clone(),
                            rank: r + 1,
                            distance: nb.distance,
                        })
                        .collect(),
                });
            }
        }
    }
    Ok(out)
}

/// Image files in `dir` keyed by file stem. PNM extensions win over others
/// when several files share a stem.
fn image_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> =
        read.map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err))).collect::<Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let rank = |p: &Path| match p.extension().and_then(|e| e.to_str()) {
        Some("ppm") | Some("pgm") | Some("pnm") => 0,
        _ => 1,
    };
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    for p in paths {
        let Some(stem) = p.file_stem().and_then(|s| s.to_str()).map(String::from) else { continue };
        match out.get(&stem) {
            Some(existing) if rank(existing) <= rank(&p) => {}
            _ => {
                out.insert(stem, p);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureRow {
    pub image_id: String,
    pub edge_density: f64,
    /// Absent for grayscale images.
    pub warmth: Option<f64>,
    pub texture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub skipped: Vec<Skipped>,
}

/// Low-level features of every manifest image found in `dir`. Images that
/// are missing or cannot be decoded are listed in `skipped`.
pub fn extract_features(manifest: &Manifest, dir: &Path, params: &CannyParams) -> Result<FeatureTable> {
    let files = image_files(dir)?;
    if files.is_empty() {
        return Err(Error::Data(format!("no image files in {}", dir.display())));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for id in &manifest.image_ids {
        let Some(path) = files.get(id) else {
            skipped.push(Skipped { image_id: id.clone(), reason: "no image file".into() });
            continue;
        };
        let result = decode_image(path).and_then(|img| {
            if img.channels() == 3 {
                profile(&img, params).map_err(Error::from).map(|p| (p, true))
            } else {
                let edge_density = layerscope_core::lowlevel::edge_density(&img, params)?;
                let texture = layerscope_core::lowlevel::texture_complexity(&img)?;
                Ok((LowLevelProfile { edge_density, warmth: 0.0, texture }, false))
            }
        });
        match result {
            Ok((p, color)) => rows.push(FeatureRow {
                image_id: id.clone(),
                edge_density: p.edge_density,
                warmth: color.then_some(p.warmth),
                texture: p.texture,
            }),
            Err(e) => skipped.push(Skipped { image_id: id.clone(), reason: e.to_string() }),
        }
    }
    Ok(FeatureTable { rows, skipped })
}

/// Low, mid and high groups for each of the three properties.
pub fn categorize(features: &FeatureTable, group_size: usize) -> Result<Vec<CategoryAssignment>> {
    let mut out = Vec::with_capacity(9);
    for property in Property::ALL {
        let values: Vec<(String, f64)> = features
            .rows
            .iter()
            .filter_map(|r| {
                let v = match property {
                    Property::Edges => Some(r.edge_density),
                    Property::Warmth => r.warmth,
                    Property::Texture => Some(r.texture),
                };
                v.map(|v| (r.image_id.clone(), v))
            })
            .collect();
        if values.len() < 3 * group_size {
            return Err(Error::Data(format!(
                "{} usable images for {property}, at least {} needed",
                values.len(),
                3 * group_size
            )));
        }
        out.extend(discretize(property, &values, group_size)?);
    }
    Ok(out)
}

/// Category table over the manifest images plus each model's layers
/// restricted to the categorized images.
pub fn categorized_layers(
    manifest: &Manifest,
    assignments: &[CategoryAssignment],
    model: &str,
) -> Result<(CategoryTable, Vec<EmbeddingMatrix>)> {
    let (table, rows) = CategoryTable::build(&manifest.image_ids, assignments)?;
    let layers = manifest
        .load_model(model)?
        .iter()
        .map(|m| m.select_rows(&rows))
        .collect::<layerscope_core::Result<Vec<_>>>()?;
    Ok((table, layers))
}

pub fn coherence(
    manifest: &Manifest,
    model: &str,
    labels: &BTreeMap<String, BTreeSet<String>>,
    options: &CoherenceOptions,
) -> Result<Vec<CoherencePoint>> {
    let layers = manifest.load_model(model)?;
    let index = LabelIndex::new(&manifest.image_ids, labels);
    Ok(coherence_curve(&layers, &index, options)?)
}

/// Manifest rows that carry a class label, ascending, with their classes.
pub fn labeled_rows(manifest: &Manifest, classes: &BTreeMap<String, String>) -> (Vec<usize>, Vec<String>) {
    manifest.image_ids.iter().enumerate().filter_map(|(i, id)| classes.get(id).map(|c| (i, c.clone()))).unzip()
}

fn labeled_stack(manifest: &Manifest, model: &str, rows: &[usize]) -> Result<Vec<EmbeddingMatrix>> {
    manifest
        .load_model(model)?
        .iter()
        .map(|m| if rows.len() == m.n_points() { Ok(m.clone()) } else { m.select_rows(rows) })
        .collect::<layerscope_core::Result<Vec<_>>>()
        .map_err(Error::from)
}

/// One binary trajectory per requested class over the labeled images.
pub fn binary_trajectories(
    manifest: &Manifest,
    model: &str,
    classes: &BTreeMap<String, String>,
    wanted: &[String],
    hp: &ProbeHyperparams,
) -> Result<Vec<Trajectory>> {
    let (rows, labels) = labeled_rows(manifest, classes);
    if rows.is_empty() {
        return Err(Error::Data("no manifest image has a class label".into()));
    }
    let stack = labeled_stack(manifest, model, &rows)?;
    wanted
        .iter()
        .map(|class| {
            let binary: Vec<bool> = labels.iter().map(|l| l == class).collect();
            class_trajectory(&stack, &binary, hp, class).map_err(Error::from)
        })
        .collect()
}

/// Per-layer accuracy of one-vs-rest probes over all classes; class indices
/// follow the sorted class names.
pub fn multiclass(
    manifest: &Manifest,
    model: &str,
    classes: &BTreeMap<String, String>,
    hp: &ProbeHyperparams,
) -> Result<Vec<f64>> {
    let (rows, labels) = labeled_rows(manifest, classes);
    if rows.is_empty() {
        return Err(Error::Data("no manifest image has a class label".into()));
    }
    let names: BTreeSet<&String> = labels.iter().collect();
    let names: Vec<&String> = names.into_iter().collect();
    let index: Vec<usize> = labels.iter().map(|l| names.binary_search(&l).expect("known class")).collect();
    let stack = labeled_stack(manifest, model, &rows)?;
    Ok(multiclass_trajectory(&stack, &index, hp)?)
}
