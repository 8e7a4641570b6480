//! Linear probes trained layer by layer, and the roughness of the resulting
//! accuracy trajectories.
//!
//! Probes are logistic-loss linear models fitted by full-batch gradient
//! descent from zero on features standardized with the training split's
//! per-dimension mean and population standard deviation. The learned weights
//! are mapped back to the raw feature space, so a [`ProbeModel`] scores raw
//! embedding rows directly. A score of exactly zero counts as positive.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::rng::SplitMix64;
use crate::stats::smoothness;
use crate::{EmbeddingMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeHyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    /// Seeds the train/heldout split.
    pub seed: u64,
    pub heldout_fraction: f64,
}

impl Default for ProbeHyperparams {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 500, l2_penalty: 1e-4, seed: 0, heldout_fraction: 0.1 }
    }
}

impl ProbeHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidHyperparams(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::InvalidHyperparams(format!("l2 penalty {} must be non-negative", self.l2_penalty)));
        }
        if !(self.heldout_fraction > 0.0 && self.heldout_fraction < 1.0) {
            return Err(Error::InvalidHyperparams(format!(
                "heldout fraction {} must lie in (0, 1)",
                self.heldout_fraction
            )));
        }
        Ok(())
    }
}

/// Disjoint train and heldout row indices covering `0..n`, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub heldout: Vec<usize>,
}

impl Split {
    /// Heldout size is `round(n * fraction)`, kept within `1..n`.
    pub fn draw(n: usize, heldout_fraction: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPoints(n));
        }
        let n_held = (libm::round(n as f64 * heldout_fraction) as usize).clamp(1, n - 1);
        let heldout = SplitMix64::new(seed).sample_indices(n, n_held);
        let mut in_heldout = vec![false; n];
        for &i in &heldout {
            in_heldout[i] = true;
        }
        let train = (0..n).filter(|&i| !in_heldout[i]).collect();
        Ok(Self { train, heldout })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub class_id: String,
}

impl ProbeModel {
    pub fn score(&self, x: &[f32]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * f64::from(*v)).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f32]) -> bool {
        self.score(x) >= 0.0
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

fn check_labels<T>(features: &EmbeddingMatrix, labels: &[T]) -> Result<()> {
    if labels.len() != features.n_points() {
        return Err(Error::PointCountMismatch { left: features.n_points(), right: labels.len() });
    }
    Ok(())
}

/// Fits a probe for `labels` on the given training rows.
pub fn fit_probe(
    features: &EmbeddingMatrix,
    labels: &[bool],
    rows: &[usize],
    hp: &ProbeHyperparams,
    class_id: &str,
) -> Result<ProbeModel> {
    hp.validate()?;
    check_labels(features, labels)?;
    for &r in rows {
        features.check_index(r)?;
    }
    let positives = rows.iter().filter(|&&r| labels[r]).count();
    if positives == 0 || positives == rows.len() {
        return Err(Error::SingleClass);
    }
    let d = features.dim();
    let m = rows.len();

    let mut mu = vec![0.0; d];
    for &r in rows {
        for (acc, v) in mu.iter_mut().zip(features.row(r)) {
            *acc += f64::from(*v);
        }
    }
    mu.iter_mut().for_each(|v| *v /= m as f64);
    let mut sigma = vec![0.0; d];
    for &r in rows {
        for ((acc, v), c) in sigma.iter_mut().zip(features.row(r)).zip(&mu) {
            let dv = f64::from(*v) - c;
            *acc += dv * dv;
        }
    }
    for s in &mut sigma {
        *s = libm::sqrt(*s / m as f64);
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let mut z = Vec::with_capacity(m * d);
    for &r in rows {
        z.extend(features.row(r).iter().zip(&mu).zip(&sigma).map(|((v, c), s)| (f64::from(*v) - c) / s));
    }
    let y: Vec<f64> = rows.iter().map(|&r| if labels[r] { 1.0 } else { 0.0 }).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..hp.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (zi, yi) in z.chunks_exact(d).zip(&y) {
            let s = zi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let g = sigmoid(s) - yi;
            for (acc, v) in grad.iter_mut().zip(zi) {
                *acc += g * v;
            }
            grad_b += g;
        }
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj -= hp.learning_rate * (gj / m as f64 + hp.l2_penalty * *wj);
        }
        b -= hp.learning_rate * grad_b / m as f64;
    }

    let weights: Vec<f64> = w.iter().zip(&sigma).map(|(wj, s)| wj / s).collect();
    let bias = b - weights.iter().zip(&mu).map(|(wj, c)| wj * c).sum::<f64>();
    if weights.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
        return Err(Error::InvalidHyperparams("training diverged to non-finite weights".into()));
    }
    Ok(ProbeModel { weights, bias, class_id: class_id.into() })
}

/// Draws the split from `hp.seed`, fits on the training rows and returns the
/// model with its split.
pub fn train_probe(
    features: &EmbeddingMatrix,
    labels: &[bool],
    hp: &ProbeHyperparams,
    class_id: &str,
) -> Result<(ProbeModel, Split)> {
    hp.validate()?;
    check_labels(features, labels)?;
    let split = Split::draw(features.n_points(), hp.heldout_fraction, hp.seed)?;
    let model = fit_probe(features, labels, &split.train, hp, class_id)?;
    Ok((model, split))
}

/// Fraction of `rows` whose predicted class matches the label.
pub fn accuracy_on(model: &ProbeModel, features: &EmbeddingMatrix, labels: &[bool], rows: &[usize]) -> Result<f64> {
    if model.weights.len() != features.dim() {
        return Err(Error::DimensionMismatch { left: model.weights.len(), right: features.dim() });
    }
    check_labels(features, labels)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("no rows to evaluate".into()));
    }
    let mut correct = 0usize;
    for &r in rows {
        features.check_index(r)?;
        if model.predict(features.row(r)) == labels[r] {
            correct += 1;
        }
    }
    Ok(correct as f64 / rows.len() as f64)
}

/// Accuracy over every row of `features`.
pub fn probe_accuracy(model: &ProbeModel, features: &EmbeddingMatrix, labels: &[bool]) -> Result<f64> {
    let rows: Vec<usize> = (0..features.n_points()).collect();
    accuracy_on(model, features, labels, &rows)
}

/// Standard deviation of the layer-to-layer accuracy differences.
pub fn roughness(accuracies: &[f64]) -> Result<f64> {
    smoothness(accuracies)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: String,
    pub class_id: String,
    pub accuracies: Vec<f64>,
    pub roughness: f64,
}

fn check_stack(layers: &[EmbeddingMatrix], n_labels: usize) -> Result<()> {
    if layers.len() < 3 {
        return Err(Error::TooFewLayers(layers.len()));
    }
    for l in layers {
        if l.n_points() != n_labels {
            return Err(Error::PointCountMismatch { left: l.n_points(), right: n_labels });
        }
    }
    Ok(())
}

/// Heldout accuracy of one binary probe per layer, all on one split drawn
/// from `hp.seed`.
pub fn class_trajectory(
    layers: &[EmbeddingMatrix],
    labels: &[bool],
    hp: &ProbeHyperparams,
    class_id: &str,
) -> Result<Trajectory> {
    hp.validate()?;
    check_stack(layers, labels.len())?;
    let split = Split::draw(labels.len(), hp.heldout_fraction, hp.seed)?;
    let accuracies = layers
        .iter()
        .map(|l| {
            let model = fit_probe(l, labels, &split.train, hp, class_id)?;
            accuracy_on(&model, l, labels, &split.heldout)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Trajectory {
        model: layers[0].layer().model_name().into(),
        class_id: class_id.into(),
        roughness: roughness(&accuracies)?,
        accuracies,
    })
}

/// Heldout accuracy per layer of one-vs-rest probes over integer class
/// labels. The prediction is the class with the highest score, the lower
/// class index on ties. Classes absent from the training split get no probe.
pub fn multiclass_trajectory(layers: &[EmbeddingMatrix], classes: &[usize], hp: &ProbeHyperparams) -> Result<Vec<f64>> {
    hp.validate()?;
    if layers.is_empty() {
        return Err(Error::TooFewLayers(0));
    }
    for l in layers {
        check_labels(l, classes)?;
    }
    let split = Split::draw(classes.len(), hp.heldout_fraction, hp.seed)?;
    let mut present: Vec<usize> = split.train.iter().map(|&r| classes[r]).collect();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::SingleClass);
    }
    layers
        .iter()
        .map(|layer| {
            let models = present
                .iter()
                .map(|&c| {
                    let binary: Vec<bool> = classes.iter().map(|&v| v == c).collect();
                    fit_probe(layer, &binary, &split.train, hp, &format!("{c}"))
                })
                .collect::<Result<Vec<_>>>()?;
            let correct = split
                .heldout
                .iter()
                .filter(|&&r| {
                    let x = layer.row(r);
                    let mut best = 0;
                    let mut best_score = models[0].score(x);
                    for (i, m) in models.iter().enumerate().skip(1) {
                        let s = m.score(x);
                        if s > best_score {
                            best = i;
                            best_score = s;
                        }
                    }
                    present[best] == classes[r]
                })
                .count();
            Ok(correct as f64 / split.heldout.len() as f64)
        })
        .collect()
}

/// Fixed-width histogram over `[0, 0.6]`; the right edge falls in the last
/// bin and larger values are counted in `overflow`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<usize>,
    pub overflow: usize,
}

impl Histogram {
    pub const BIN_WIDTH: f64 = 0.02;
    pub const BINS: usize = 30;
    pub const UPPER: f64 = 0.6;

    pub fn new(values: &[f64]) -> Self {
        let mut counts = vec![0; Self::BINS];
        let mut overflow = 0;
        for &v in values {
            let bin = libm::floor(v * 50.0) as usize;
            if bin < Self::BINS {
                counts[bin] += 1;
            } else if v <= Self::UPPER {
                counts[Self::BINS - 1] += 1;
            } else {
                overflow += 1;
            }
        }
        Self { counts, overflow }
    }

    /// Lower edge of bin `i`.
    pub fn bin_start(i: usize) -> f64 {
        i as f64 * Self::BIN_WIDTH
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessDistribution {
    /// Roughness values per model, in input order.
    pub per_model: BTreeMap<String, Vec<f64>>,
    pub histograms: BTreeMap<String, Histogram>,
}

pub fn roughness_distribution(trajectories: &[Trajectory]) -> Result<RoughnessDistribution> {
    if trajectories.is_empty() {
        return Err(Error::EmptyInput("no trajectories".into()));
    }
    let mut per_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for t in trajectories {
        if !(t.roughness.is_finite() && t.roughness >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid roughness {} for class `{}`",
                t.roughness, t.class_id
            )));
        }
        per_model.entry(t.model.clone()).or_default().push(t.roughness);
    }
    let histograms = per_model.iter().map(|(m, v)| (m.clone(), Histogram::new(v))).collect();
    Ok(RoughnessDistribution { per_model, histograms })
}
