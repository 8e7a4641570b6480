//! Label overlap between images and their nearest neighbors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::knn::{k_nearest, k_nearest_many, Metric, NeighborhoodSpec};
use crate::rng::SplitMix64;
use crate::stats::{mean, population_std};
use crate::{EmbeddingMatrix, Error, LayerRef, Result};

pub type LabelSet = BTreeSet<String>;

/// `|a ∩ b| / |a ∪ b|`.
pub fn jaccard(a: &LabelSet, b: &LabelSet) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::EmptyLabelSets);
    }
    let shared = a.intersection(b).count();
    let union = a.len() + b.len() - shared;
    Ok(shared as f64 / union as f64)
}

/// Label sets aligned with the rows of an embedding matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndex {
    ids: Vec<String>,
    sets: Vec<Option<LabelSet>>,
}

impl LabelIndex {
    /// Rows without an entry in `labels` stay unlabeled; they may not be
    /// queried and fail when they turn up as a neighbor.
    pub fn new(ids: &[String], labels: &BTreeMap<String, LabelSet>) -> Self {
        Self { ids: ids.to_vec(), sets: ids.iter().map(|id| labels.get(id).cloned()).collect() }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Rows that carry labels, ascending.
    pub fn labeled_rows(&self) -> Vec<usize> {
        (0..self.sets.len()).filter(|&i| self.sets[i].is_some()).collect()
    }

    pub fn get(&self, row: usize) -> Result<&LabelSet> {
        match self.sets.get(row) {
            Some(Some(set)) => Ok(set),
            Some(None) => Err(Error::MissingLabels(self.ids[row].clone())),
            None => Err(Error::IndexOutOfRange { index: row, len: self.sets.len() }),
        }
    }
}

/// Which label pairs a neighborhood contributes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PairScope {
    /// The query against each of its `k` neighbors.
    #[default]
    QueryNeighbor,
    /// Every unordered pair among the query and its neighbors.
    AllPairs,
}

/// How per-pair values are aggregated into a layer's mean and spread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Spread {
    /// Mean and standard deviation over all pair values together.
    #[default]
    Pooled,
    /// Mean and standard deviation of the per-neighborhood means.
    PerNeighborhood,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodCoherence {
    pub mean: f64,
    pub values: Vec<f64>,
}

fn pair_values(members: &[usize], labels: &LabelIndex, scope: PairScope) -> Result<Vec<f64>> {
    let sets = members.iter().map(|&i| labels.get(i)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    match scope {
        PairScope::QueryNeighbor => {
            for s in &sets[1..] {
                out.push(jaccard(sets[0], s)?);
            }
        }
        PairScope::AllPairs => {
            for i in 0..sets.len() {
                for j in i + 1..sets.len() {
                    out.push(jaccard(sets[i], sets[j])?);
                }
            }
        }
    }
    Ok(out)
}

fn summarize(values: Vec<f64>) -> NeighborhoodCoherence {
    NeighborhoodCoherence { mean: mean(&values).unwrap_or(0.0), values }
}

/// Jaccard overlap between `query`'s labels and those of its `k` nearest
/// neighbors in `layer`.
pub fn neighborhood_coherence(
    query: usize,
    layer: &EmbeddingMatrix,
    labels: &LabelIndex,
    spec: NeighborhoodSpec,
    metric: Metric,
    scope: PairScope,
) -> Result<NeighborhoodCoherence> {
    if labels.len() != layer.n_points() {
        return Err(Error::PointCountMismatch { left: layer.n_points(), right: labels.len() });
    }
    labels.get(query)?;
    let mut members = alloc::vec![query];
    members.extend(k_nearest(layer, query, spec, metric)?);
    Ok(summarize(pair_values(&members, labels, scope)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherencePoint {
    pub layer: LayerRef,
    pub mean: f64,
    pub std: f64,
    pub n_queries: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceOptions {
    pub n_queries: usize,
    pub spec: NeighborhoodSpec,
    pub metric: Metric,
    pub seed: u64,
    pub scope: PairScope,
    pub spread: Spread,
}

impl Default for CoherenceOptions {
    fn default() -> Self {
        Self {
            n_queries: 50,
            spec: NeighborhoodSpec::default(),
            metric: Metric::Euclidean,
            seed: 0,
            scope: PairScope::default(),
            spread: Spread::default(),
        }
    }
}

/// Queries used by [`coherence_curve`]: a sorted sample of the labeled rows.
pub fn sample_queries(labels: &LabelIndex, n_queries: usize, seed: u64) -> Result<Vec<usize>> {
    let labeled = labels.labeled_rows();
    if n_queries == 0 {
        return Err(Error::InvalidArgument("number of queries must be at least 1".into()));
    }
    if n_queries > labeled.len() {
        return Err(Error::SampleTooLarge { requested: n_queries, available: labeled.len() });
    }
    let picks = SplitMix64::new(seed).sample_indices(labeled.len(), n_queries);
    Ok(picks.into_iter().map(|i| labeled[i]).collect())
}

/// Coherence per layer over one query sample shared by all layers.
pub fn coherence_curve(
    layers: &[EmbeddingMatrix],
    labels: &LabelIndex,
    options: &CoherenceOptions,
) -> Result<Vec<CoherencePoint>> {
    let queries = sample_queries(labels, options.n_queries, options.seed)?;
    layers
        .iter()
        .map(|layer| {
            if labels.len() != layer.n_points() {
                return Err(Error::PointCountMismatch { left: layer.n_points(), right: labels.len() });
            }
            let neighbors = k_nearest_many(layer, &queries, options.spec, options.metric)?;
            let mut pooled = Vec::new();
            let mut per_query = Vec::with_capacity(queries.len());
            for (&q, nn) in queries.iter().zip(&neighbors) {
                let mut members = alloc::vec![q];
                members.extend(nn.iter().map(|n| n.index));
                let values = pair_values(&members, labels, options.scope)?;
                per_query.push(mean(&values).unwrap_or(0.0));
                pooled.extend(values);
            }
            let spread_over = match options.spread {
                Spread::Pooled => &pooled,
                Spread::PerNeighborhood => &per_query,
            };
            Ok(CoherencePoint {
                layer: layer.layer().clone(),
                mean: mean(spread_over).unwrap_or(0.0),
                std: population_std(spread_over).unwrap_or(0.0),
                n_queries: queries.len(),
                k: options.spec.k(),
            })
        })
        .collect()
}
