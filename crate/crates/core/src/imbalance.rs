//! Information imbalance between two representation spaces.
//!
//! For spaces `A` and `B` over the same `N` points,
//!
//! ```text
//! Δ(A → B) = 2/N · mean_i rank_B(i, nn_A(i))
//! ```
//!
//! where `nn_A(i)` is the nearest neighbor of `i` in `A` and `rank_B(i, j)` is
//! the 1-based position of `j` in the rank array of `i` in `B`. When `B` keeps
//! every nearest neighbor of `A` the mean rank is 1 and `Δ = 2/N`; when `B`
//! ranks them at random the mean rank is about `N/2` and `Δ ≈ 1`. Every value
//! lies in `[2/N, 2(N-1)/N]`.
//!
//! Ranks are summed as integers, so the result does not depend on the order in
//! which queries are processed.

use alloc::vec;
use alloc::vec::Vec;

use crate::knn::{map_blocks, nearest_in_row, rank_in_row, Space, QUERY_BLOCK};
use crate::rng::SplitMix64;
use crate::{EmbeddingMatrix, Error, LayerRef, Metric, Result};

pub use crate::stats::smoothness;

/// Both directions of the imbalance between two layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceResult {
    /// Δ(A → B): how well neighborhoods in A predict those in B.
    pub delta_ab: f64,
    /// Δ(B → A).
    pub delta_ba: f64,
    pub n_used: usize,
    pub metric: Metric,
    pub layer_a: LayerRef,
    pub layer_b: LayerRef,
    pub subsample_seed: Option<u64>,
}

impl ImbalanceResult {
    /// The same result seen from the other side.
    pub fn swapped(&self) -> Self {
        Self {
            delta_ab: self.delta_ba,
            delta_ba: self.delta_ab,
            n_used: self.n_used,
            metric: self.metric,
            layer_a: self.layer_b.clone(),
            layer_b: self.layer_a.clone(),
            subsample_seed: self.subsample_seed,
        }
    }
}

/// Lower and upper bounds of Δ for `n` points.
pub fn delta_bounds(n: usize) -> (f64, f64) {
    let n = n as f64;
    (2.0 / n, 2.0 * (n - 1.0) / n)
}

#[inline]
fn delta_from_rank_sum(sum: u64, n: usize) -> f64 {
    let nf = n as f64;
    let delta = 2.0 * sum as f64 / (nf * nf);
    assert!(
        {
            let (lo, hi) = delta_bounds(n);
            delta >= lo && delta <= hi
        },
        "imbalance {delta} outside [2/N, 2(N-1)/N] for N = {n}"
    );
    delta
}

fn check_pair(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<usize> {
    if a.n_points() != b.n_points() {
        return Err(Error::PointCountMismatch { left: a.n_points(), right: b.n_points() });
    }
    if a.n_points() < 2 {
        return Err(Error::TooFewPoints(a.n_points()));
    }
    Ok(a.n_points())
}

/// Sums of cross ranks in both directions: `(Σ rank_B(nn_A), Σ rank_A(nn_B))`.
fn cross_rank_sums(a: &EmbeddingMatrix, b: &EmbeddingMatrix, metric: Metric) -> Result<(u64, u64)> {
    let n = check_pair(a, b)?;
    let space_a = Space::new(a, metric)?;
    let space_b = Space::new(b, metric)?;
    let partial = map_blocks(n, QUERY_BLOCK, |queries| {
        let mut rows_a = vec![0.0; queries.len() * n];
        let mut rows_b = vec![0.0; queries.len() * n];
        space_a.fill_block(queries.clone(), &mut rows_a);
        space_b.fill_block(queries.clone(), &mut rows_b);
        let mut sums = (0u64, 0u64);
        for (q, (row_a, row_b)) in queries.zip(rows_a.chunks_exact(n).zip(rows_b.chunks_exact(n))) {
            sums.0 += rank_in_row(row_b, q, nearest_in_row(row_a, q)) as u64;
            sums.1 += rank_in_row(row_a, q, nearest_in_row(row_b, q)) as u64;
        }
        sums
    });
    Ok(partial.into_iter().fold((0, 0), |acc, s| (acc.0 + s.0, acc.1 + s.1)))
}

/// Δ(A → B). Row `i` of `a` and `b` must describe the same point.
pub fn information_imbalance(a: &EmbeddingMatrix, b: &EmbeddingMatrix, metric: Metric) -> Result<f64> {
    let (ab, _) = cross_rank_sums(a, b, metric)?;
    Ok(delta_from_rank_sum(ab, a.n_points()))
}

/// Δ(A → B) and Δ(B → A) from a single pass over both spaces.
pub fn imbalance_both(a: &EmbeddingMatrix, b: &EmbeddingMatrix, metric: Metric) -> Result<ImbalanceResult> {
    let (ab, ba) = cross_rank_sums(a, b, metric)?;
    let n = a.n_points();
    Ok(ImbalanceResult {
        delta_ab: delta_from_rank_sum(ab, n),
        delta_ba: delta_from_rank_sum(ba, n),
        n_used: n,
        metric,
        layer_a: a.layer().clone(),
        layer_b: b.layer().clone(),
        subsample_seed: None,
    })
}

/// Which layers of the predicting model are compared against every layer of
/// the other model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AnchorRule {
    /// Second, middle (`floor(L/2)`) and penultimate layer.
    #[default]
    ThreePoint,
    All,
    /// Explicit layer positions.
    Explicit(Vec<usize>),
}

impl AnchorRule {
    /// Positions within a stack of `layer_count` layers, without duplicates.
    pub fn select(&self, layer_count: usize) -> Result<Vec<usize>> {
        let picked = match self {
            AnchorRule::ThreePoint => {
                if layer_count < 3 {
                    return Err(Error::TooFewLayers(layer_count));
                }
                vec![1, layer_count / 2, layer_count - 2]
            }
            AnchorRule::All => (0..layer_count).collect(),
            AnchorRule::Explicit(list) => {
                if let Some(&bad) = list.iter().find(|&&i| i >= layer_count) {
                    return Err(Error::IndexOutOfRange { index: bad, len: layer_count });
                }
                list.clone()
            }
        };
        let mut out = Vec::with_capacity(picked.len());
        for p in picked {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyInput("anchor list".into()));
        }
        Ok(out)
    }
}

/// Direction of a grid series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Anchor layer predicting target layer.
    AnchorToTarget,
    TargetToAnchor,
}

/// Imbalance of selected anchor layers of one stack against every layer of
/// another, all on one shared subsample of points.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceGrid {
    anchors: Vec<LayerRef>,
    targets: Vec<LayerRef>,
    values: Vec<ImbalanceResult>,
}

impl ImbalanceGrid {
    pub fn anchors(&self) -> &[LayerRef] {
        &self.anchors
    }

    pub fn targets(&self) -> &[LayerRef] {
        &self.targets
    }

    pub fn get(&self, anchor: usize, target: usize) -> &ImbalanceResult {
        &self.values[anchor * self.targets.len() + target]
    }

    /// Cells in row-major (anchor, target) order.
    pub fn cells(&self) -> &[ImbalanceResult] {
        &self.values
    }

    /// Δ along the targets for one anchor.
    pub fn series(&self, anchor: usize, direction: Direction) -> Vec<f64> {
        (0..self.targets.len())
            .map(|t| {
                let cell = self.get(anchor, t);
                match direction {
                    Direction::AnchorToTarget => cell.delta_ab,
                    Direction::TargetToAnchor => cell.delta_ba,
                }
            })
            .collect()
    }

    /// The grid with the roles of the two stacks exchanged. Only meaningful
    /// for grids whose anchors are all layers.
    pub fn transposed(&self) -> Self {
        let (na, nt) = (self.anchors.len(), self.targets.len());
        let mut values = Vec::with_capacity(self.values.len());
        for t in 0..nt {
            for a in 0..na {
                values.push(self.get(a, t).swapped());
            }
        }
        Self { anchors: self.targets.clone(), targets: self.anchors.clone(), values }
    }
}

fn stack_points(stack: &[EmbeddingMatrix]) -> Result<usize> {
    let first = stack.first().ok_or_else(|| Error::EmptyInput("layer stack".into()))?;
    for m in stack {
        if m.n_points() != first.n_points() {
            return Err(Error::PointCountMismatch { left: first.n_points(), right: m.n_points() });
        }
    }
    Ok(first.n_points())
}

/// Grid of `anchors(stack_a) × stack_b` on a shared random subsample of `n`
/// points drawn once from `seed`.
pub fn layer_grid(
    stack_a: &[EmbeddingMatrix],
    stack_b: &[EmbeddingMatrix],
    anchors: &AnchorRule,
    n: usize,
    seed: u64,
    metric: Metric,
) -> Result<ImbalanceGrid> {
    let population = stack_points(stack_a)?;
    let other = stack_points(stack_b)?;
    if population != other {
        return Err(Error::PointCountMismatch { left: population, right: other });
    }
    if n > population {
        return Err(Error::SampleTooLarge { requested: n, available: population });
    }
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let picks = anchors.select(stack_a.len())?;
    let sample = SplitMix64::new(seed).sample_indices(population, n);

    let sub_a = picks.iter().map(|&p| stack_a[p].select_rows(&sample)).collect::<Result<Vec<_>>>()?;
    let sub_b = stack_b.iter().map(|m| m.select_rows(&sample)).collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(sub_a.len() * sub_b.len());
    for a in &sub_a {
        for b in &sub_b {
            let mut cell = imbalance_both(a, b, metric)?;
            cell.subsample_seed = Some(seed);
            values.push(cell);
        }
    }
    Ok(ImbalanceGrid {
        anchors: sub_a.iter().map(|m| m.layer().clone()).collect(),
        targets: sub_b.iter().map(|m| m.layer().clone()).collect(),
        values,
    })
}

/// A per-layer series together with its smoothness.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub series: Vec<f64>,
    pub smoothness: f64,
}

impl SeriesStats {
    pub fn new(series: Vec<f64>) -> Result<Self> {
        let smoothness = smoothness(&series)?;
        Ok(Self { series, smoothness })
    }
}

/// Spread of Δ(A → B) across independent subsamples of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleStat {
    pub size: usize,
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

/// For every size, Δ(A → B) on `trials` independent subsamples drawn without
/// replacement, summarized by mean and population standard deviation.
///
/// Trial `t` of the `s`-th size draws from `SplitMix64::derive(seed, s << 32 | t)`.
pub fn subsample_std(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    sizes: &[usize],
    trials: usize,
    metric: Metric,
    seed: u64,
) -> Result<Vec<SubsampleStat>> {
    let population = check_pair(a, b)?;
    if trials < 2 {
        return Err(Error::TooFewTrials { got: trials, min: 2 });
    }
    if sizes.is_empty() {
        return Err(Error::EmptyInput("subsample sizes".into()));
    }
    for &s in sizes {
        if s > population {
            return Err(Error::SampleTooLarge { requested: s, available: population });
        }
        if s < 2 {
            return Err(Error::TooFewPoints(s));
        }
    }
    let mut out = Vec::with_capacity(sizes.len());
    for (si, &size) in sizes.iter().enumerate() {
        let mut values = Vec::with_capacity(trials);
        for t in 0..trials {
            let stream = ((si as u64) << 32) | t as u64;
            let idx = SplitMix64::derive(seed, stream).sample_indices(population, size);
            values.push(information_imbalance(&a.select_rows(&idx)?, &b.select_rows(&idx)?, metric)?);
        }
        let mean = crate::stats::mean(&values).unwrap_or(0.0);
        let std = if values.iter().all(|v| *v == values[0]) {
            0.0
        } else {
            crate::stats::population_std(&values).unwrap_or(0.0)
        };
        out.push(SubsampleStat { size, mean, std, values });
    }
    Ok(out)
}
