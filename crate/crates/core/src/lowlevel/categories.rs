//! Low/mid/high discretization of the image properties and the share of
//! neighbors that fall into a query's categories.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::knn::{k_nearest_all, Metric, NeighborhoodSpec};
use crate::rng::SplitMix64;
use crate::{EmbeddingMatrix, Error, LayerRef, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    Edges,
    Warmth,
    Texture,
}

impl Property {
    pub const ALL: [Property; 3] = [Property::Edges, Property::Warmth, Property::Texture];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::Edges => "edges",
            Property::Warmth => "warmth",
            Property::Texture => "texture",
        }
    }

    fn mask(self) -> u16 {
        0b111 << (3 * self as u16)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown property `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Low,
    Mid,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Mid, Level::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Mid => "mid",
            Level::High => "high",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown level `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryAssignment {
    pub property: Property,
    pub level: Level,
    pub members: BTreeSet<String>,
}

impl CategoryAssignment {
    fn bit(&self) -> u16 {
        1 << (3 * self.property as u16 + self.level as u16)
    }
}

/// Splits one property's values into low, mid and high groups of
/// `group_size` images each.
///
/// Values are ordered ascending with ties broken by image id; the mid group
/// starts at `floor((n - group_size) / 2)`.
pub fn discretize(property: Property, values: &[(String, f64)], group_size: usize) -> Result<[CategoryAssignment; 3]> {
    if group_size == 0 {
        return Err(Error::InvalidArgument("group size must be at least 1".into()));
    }
    let n = values.len();
    if n < 3 * group_size {
        return Err(Error::TooFewValues { have: n, group_size });
    }
    if let Some(i) = values.iter().position(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let mut order: Vec<&(String, f64)> = values.iter().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mid = (n - group_size) / 2;
    let take = |start: usize| order[start..start + group_size].iter().map(|(id, _)| id.clone()).collect();
    let sets = [take(0), take(mid), take(n - group_size)];
    let distinct: BTreeSet<&String> = values.iter().map(|(id, _)| id).collect();
    if distinct.len() != n {
        return Err(Error::InvalidArgument("duplicate image ids in property values".into()));
    }
    let [low, middle, high] = sets;
    Ok([
        CategoryAssignment { property, level: Level::Low, members: low },
        CategoryAssignment { property, level: Level::Mid, members: middle },
        CategoryAssignment { property, level: Level::High, members: high },
    ])
}

/// Category membership of the categorized images, one bit per
/// (property, level) pair, in the row order of the matching embeddings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    ids: Vec<String>,
    masks: Vec<u16>,
}

impl CategoryTable {
    /// Table over the images of `ordered_ids` that belong to at least one
    /// category, keeping their relative order. Also returns the positions of
    /// the kept images within `ordered_ids`.
    pub fn build(ordered_ids: &[String], assignments: &[CategoryAssignment]) -> Result<(Self, Vec<usize>)> {
        if assignments.is_empty() {
            return Err(Error::EmptyInput("no category assignments".into()));
        }
        let mut bits: BTreeMap<&str, u16> = BTreeMap::new();
        for a in assignments {
            for id in &a.members {
                *bits.entry(id.as_str()).or_insert(0) |= a.bit();
            }
        }
        let known: BTreeSet<&str> = ordered_ids.iter().map(String::as_str).collect();
        if let Some(missing) = bits.keys().find(|id| !known.contains(*id)) {
            return Err(Error::InvalidArgument(format!("category member `{missing}` is not among the images")));
        }
        let mut ids = Vec::new();
        let mut masks = Vec::new();
        let mut rows = Vec::new();
        for (i, id) in ordered_ids.iter().enumerate() {
            if let Some(&m) = bits.get(id.as_str()) {
                ids.push(id.clone());
                masks.push(m);
                rows.push(i);
            }
        }
        Ok((Self { ids, masks }, rows))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn masks(&self) -> &[u16] {
        &self.masks
    }
}

fn filter_mask(property: Option<Property>) -> u16 {
    property.map_or(0x1FF, Property::mask)
}

fn share_in_layer(
    layer: &EmbeddingMatrix,
    table: &CategoryTable,
    spec: NeighborhoodSpec,
    metric: Metric,
    filter: u16,
) -> Result<f64> {
    if layer.n_points() != table.len() {
        return Err(Error::PointCountMismatch { left: layer.n_points(), right: table.len() });
    }
    spec.validate(table.len())?;
    let masks = &table.masks;
    if !masks.iter().any(|m| m & filter != 0) {
        return Err(Error::EmptyInput("no image carries a category of this property".into()));
    }
    let neighbors = k_nearest_all(layer, spec, metric)?;
    let (mut total, mut queries) = (0.0, 0usize);
    for (q, nn) in neighbors.iter().enumerate() {
        let mq = masks[q] & filter;
        if mq == 0 {
            continue;
        }
        let hits = nn.iter().filter(|&&j| masks[j] & mq != 0).count();
        total += hits as f64 / spec.k() as f64;
        queries += 1;
    }
    Ok(total / queries as f64)
}

/// Per layer, the mean fraction of each categorized image's `k` nearest
/// neighbors that share at least one category with it.
pub fn category_share(
    layers: &[EmbeddingMatrix],
    table: &CategoryTable,
    spec: NeighborhoodSpec,
    metric: Metric,
) -> Result<Vec<f64>> {
    layers.iter().map(|l| share_in_layer(l, table, spec, metric, filter_mask(None))).collect()
}

/// Like [`category_share`], matching only the three levels of `property`.
/// Queries are the images that have a level of that property.
pub fn per_property_share(
    layers: &[EmbeddingMatrix],
    table: &CategoryTable,
    spec: NeighborhoodSpec,
    metric: Metric,
    property: Property,
) -> Result<Vec<f64>> {
    layers.iter().map(|l| share_in_layer(l, table, spec, metric, filter_mask(Some(property)))).collect()
}

/// Expected share when neighbors are drawn uniformly from the other
/// categorized images.
pub fn analytic_baseline(table: &CategoryTable, property: Option<Property>) -> f64 {
    let filter = filter_mask(property);
    let n = table.len();
    let (mut total, mut queries) = (0.0, 0usize);
    for (q, &m) in table.masks.iter().enumerate() {
        let mq = m & filter;
        if mq == 0 {
            continue;
        }
        let mates = table.masks.iter().enumerate().filter(|&(j, &mj)| j != q && mj & mq != 0).count();
        total += mates as f64 / (n - 1) as f64;
        queries += 1;
    }
    if queries == 0 {
        0.0
    } else {
        total / queries as f64
    }
}

/// Dimension of the uniform random points used by [`random_baseline`].
pub const BASELINE_DIM: usize = 8;

/// Monte Carlo share obtained when every categorized image is replaced by a
/// uniform random point in the unit cube. Trial `t` draws from stream `t` of
/// `seed`.
pub fn random_baseline(
    table: &CategoryTable,
    spec: NeighborhoodSpec,
    trials: usize,
    seed: u64,
    property: Option<Property>,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::TooFewTrials { got: 0, min: 1 });
    }
    let n = table.len();
    spec.validate(n)?;
    let mut total = 0.0;
    for t in 0..trials {
        let mut rng = SplitMix64::derive(seed, t as u64);
        let values: Vec<f32> = (0..n * BASELINE_DIM).map(|_| rng.next_f64() as f32).collect();
        let points = EmbeddingMatrix::new(n, BASELINE_DIM, values, LayerRef::anonymous())?;
        total += share_in_layer(&points, table, spec, Metric::Euclidean, filter_mask(property))?;
    }
    Ok(total / trials as f64)
}
