//! Seeded synthetic embeddings and images.
//!
//! Every generator is a pure function of its arguments. Randomness comes from
//! [`SplitMix64`] seeded with the caller's seed, consumed in the order the
//! values are written (point by point, coordinate by coordinate).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::lowlevel::ImageRaster;
use crate::rng::SplitMix64;
use crate::{EmbeddingMatrix, Error, LayerRef, Result};

fn layer(model: &str, index: usize, count: usize) -> LayerRef {
    LayerRef::new(model, index, count).expect("index below count")
}

fn random_unit(rng: &mut SplitMix64, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn check_counts(n: usize, d: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    if d == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok(())
}

/// Unit-variance Gaussian clusters with centers at distance `separation` from
/// the origin in random directions. Point `i` belongs to cluster
/// `i % n_clusters`.
pub fn gen_gaussian_clusters(
    n: usize,
    d: usize,
    n_clusters: usize,
    separation: f64,
    seed: u64,
) -> Result<(EmbeddingMatrix, Vec<usize>)> {
    check_counts(n, d)?;
    if n_clusters == 0 {
        return Err(Error::InvalidArgument("at least one cluster is required".into()));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::InvalidArgument(format!("separation {separation} must be non-negative")));
    }
    let mut rng = SplitMix64::new(seed);
    let centers: Vec<Vec<f64>> =
        (0..n_clusters).map(|_| random_unit(&mut rng, d).into_iter().map(|x| x * separation).collect()).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % n_clusters).collect();
    let mut values = Vec::with_capacity(n * d);
    for &c in &labels {
        values.extend(centers[c].iter().map(|m| (m + rng.normal()) as f32));
    }
    Ok((EmbeddingMatrix::new(n, d, values, layer("clusters", 0, 1))?, labels))
}

/// Two balanced classes whose means sit at `±margin` along a random unit
/// direction, with unit-variance noise. Even rows are positive.
pub fn gen_margin_pair(n: usize, d: usize, margin: f64, seed: u64) -> Result<(EmbeddingMatrix, Vec<bool>)> {
    check_counts(n, d)?;
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin {margin} must be non-negative")));
    }
    let mut rng = SplitMix64::new(seed);
    let u = random_unit(&mut rng, d);
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let mut values = Vec::with_capacity(n * d);
    for &positive in &labels {
        let shift = if positive { margin } else { -margin };
        values.extend(u.iter().map(|u| (shift * u + rng.normal()) as f32));
    }
    Ok((EmbeddingMatrix::new(n, d, values, layer("margin", 0, 1))?, labels))
}

/// Two three-layer stacks over the same points that end in the same place by
/// different routes.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoProcess {
    /// Shape first, then shape and color.
    pub stack_a: Vec<EmbeddingMatrix>,
    /// Color first, then color and shape.
    pub stack_b: Vec<EmbeddingMatrix>,
    pub shapes: Vec<usize>,
    pub colors: Vec<usize>,
}

pub const TWO_PROCESS_DIM: usize = 12;

/// Each point has a shape and a color in `0..4` and four nuisance
/// coordinates `eta`. Coordinates are laid out as shape one-hot, color
/// one-hot, nuisance:
///
/// ```text
/// A1 = [4 s, 0,   eta]    B1 = [0,   4 c, eta]
/// A2 = [4 s, 2 c, eta]    B2 = [2 s, 4 c, eta]
/// A3 = B3 = [4 s, 4 c, 0.5 eta + 0.1 xi]
/// ```
pub fn gen_two_process(n: usize, seed: u64) -> Result<TwoProcess> {
    if n < 100 {
        return Err(Error::TooFewPoints(n));
    }
    let mut rng = SplitMix64::new(seed);
    let mut shapes = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut layers: [Vec<f32>; 5] = Default::default();
    for _ in 0..n {
        let s = rng.below(4) as usize;
        let c = rng.below(4) as usize;
        let eta: [f64; 4] = core::array::from_fn(|_| rng.normal());
        let xi: [f64; 4] = core::array::from_fn(|_| rng.normal());
        shapes.push(s);
        colors.push(c);
        let row = |shape_w: f64, color_w: f64, tail: &[f64; 4]| {
            let mut r = [0.0f32; TWO_PROCESS_DIM];
            r[s] = shape_w as f32;
            r[4 + c] = color_w as f32;
            for (dst, v) in r[8..].iter_mut().zip(tail) {
                *dst = *v as f32;
            }
            r
        };
        let shared: [f64; 4] = core::array::from_fn(|j| 0.5 * eta[j] + 0.1 * xi[j]);
        layers[0].extend(row(4.0, 0.0, &eta));
        layers[1].extend(row(4.0, 2.0, &eta));
        layers[2].extend(row(0.0, 4.0, &eta));
        layers[3].extend(row(2.0, 4.0, &eta));
        layers[4].extend(row(4.0, 4.0, &shared));
    }
    let [a1, a2, b1, b2, last] = layers;
    let m = |v: Vec<f32>, model: &str, i: usize| EmbeddingMatrix::new(n, TWO_PROCESS_DIM, v, layer(model, i, 3));
    Ok(TwoProcess {
        stack_a: vec![m(a1, "process_a", 0)?, m(a2, "process_a", 1)?, m(last.clone(), "process_a", 2)?],
        stack_b: vec![m(b1, "process_b", 0)?, m(b2, "process_b", 1)?, m(last, "process_b", 2)?],
        shapes,
        colors,
    })
}

/// `base` plus `sigma` times standard normal noise.
pub fn gen_noisy_copy(base: &EmbeddingMatrix, sigma: f64, seed: u64) -> Result<EmbeddingMatrix> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must be non-negative")));
    }
    let mut rng = SplitMix64::new(seed);
    let values = base.values().iter().map(|&v| (f64::from(v) + sigma * rng.normal()) as f32).collect();
    EmbeddingMatrix::new(base.n_points(), base.dim(), values, base.layer().clone())
}

/// `base` with its rows in a random order, so row `i` of the copy is row
/// `perm[i]` of `base`. Also returns `perm`.
pub fn gen_shuffled_copy(base: &EmbeddingMatrix, seed: u64) -> Result<(EmbeddingMatrix, Vec<usize>)> {
    let perm = SplitMix64::new(seed).permutation(base.n_points());
    Ok((base.select_rows(&perm)?, perm))
}

/// A random walk of `n_layers` layers: layer 0 is standard normal and every
/// further layer adds `step` times fresh standard normal noise.
pub fn gen_progressive_stack(
    n: usize,
    d: usize,
    n_layers: usize,
    step: f64,
    seed: u64,
    model: &str,
) -> Result<Vec<EmbeddingMatrix>> {
    check_counts(n, d)?;
    if n_layers == 0 {
        return Err(Error::TooFewLayers(0));
    }
    if !(step.is_finite() && step >= 0.0) {
        return Err(Error::InvalidArgument(format!("step {step} must be non-negative")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut current: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
    let mut out = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        if i > 0 {
            current.iter_mut().for_each(|v| *v += step * rng.normal());
        }
        let values = current.iter().map(|&v| v as f32).collect();
        out.push(EmbeddingMatrix::new(n, d, values, LayerRef::new(model, i, n_layers)?)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageKind {
    /// Gray image of one value.
    Constant(u8),
    /// Gray image, black left of `column` and white from it on.
    StepEdge {
        column: usize,
    },
    /// Vertical black and white stripes, each `width` pixels wide.
    Stripes {
        width: usize,
    },
    /// Independent uniform RGB samples.
    Noise,
    SolidColor([u8; 3]),
}

pub fn gen_synthetic_image(kind: ImageKind, width: usize, height: usize, seed: u64) -> Result<ImageRaster> {
    if width < 3 || height < 3 {
        return Err(Error::ImageTooSmall { width, height });
    }
    let gray = |f: &dyn Fn(usize) -> u8| {
        let samples = (0..width * height).map(|i| f(i % width)).collect();
        ImageRaster::new(width, height, 1, samples)
    };
    match kind {
        ImageKind::Constant(v) => ImageRaster::filled(width, height, &[v]),
        ImageKind::StepEdge { column } => gray(&|x| if x < column { 0 } else { 255 }),
        ImageKind::Stripes { width: w } => {
            if w == 0 {
                return Err(Error::InvalidArgument("stripe width must be at least 1".into()));
            }
            gray(&|x| if (x / w) % 2 == 0 { 0 } else { 255 })
        }
        ImageKind::Noise => {
            let mut rng = SplitMix64::new(seed);
            let samples = (0..width * height * 3).map(|_| (rng.next_u64() >> 56) as u8).collect();
            ImageRaster::new(width, height, 3, samples)
        }
        ImageKind::SolidColor(rgb) => ImageRaster::filled(width, height, &rgb),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    GaussianClusters { n_clusters: usize, separation: f64 },
    TwoProcess,
    NoisyCopy { sigma: f64 },
    ShuffledCopy,
    ProgressiveWalk { n_layers: usize, step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_points: usize,
    pub dim: usize,
    pub seed: u64,
    pub structure: Structure,
}

/// Generated models (each a stack of layers sharing one point order) and
/// named integer labels over the points.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub models: Vec<Vec<EmbeddingMatrix>>,
    pub labels: Vec<(String, Vec<usize>)>,
}

impl SynthSpec {
    /// `TwoProcess` ignores `dim`. `NoisyCopy` and `ShuffledCopy` give one
    /// two-layer model: a Gaussian base and its copy.
    pub fn generate(&self) -> Result<SynthOutput> {
        check_counts(self.n_points, self.dim)?;
        let (n, d, seed) = (self.n_points, self.dim, self.seed);
        let relabel = |m: EmbeddingMatrix, model: &str, i: usize, count: usize| m.with_layer(layer(model, i, count));
        Ok(match self.structure {
            Structure::GaussianClusters { n_clusters, separation } => {
                let (m, labels) = gen_gaussian_clusters(n, d, n_clusters, separation, seed)?;
                SynthOutput { models: vec![vec![m]], labels: vec![("cluster".into(), labels)] }
            }
            Structure::TwoProcess => {
                let tp = gen_two_process(n, seed)?;
                SynthOutput {
                    models: vec![tp.stack_a, tp.stack_b],
                    labels: vec![("shape".into(), tp.shapes), ("color".into(), tp.colors)],
                }
            }
            Structure::NoisyCopy { sigma } => {
                let base = gen_progressive_stack(n, d, 1, 0.0, seed, "noisy_copy")?.remove(0);
                let copy = gen_noisy_copy(&base, sigma, SplitMix64::derive(seed, 1).next_u64())?;
                SynthOutput {
                    models: vec![vec![relabel(base, "noisy_copy", 0, 2), relabel(copy, "noisy_copy", 1, 2)]],
                    labels: Vec::new(),
                }
            }
            Structure::ShuffledCopy => {
                let base = gen_progressive_stack(n, d, 1, 0.0, seed, "shuffled_copy")?.remove(0);
                let (copy, _) = gen_shuffled_copy(&base, SplitMix64::derive(seed, 1).next_u64())?;
                SynthOutput {
                    models: vec![vec![relabel(base, "shuffled_copy", 0, 2), relabel(copy, "shuffled_copy", 1, 2)]],
                    labels: Vec::new(),
                }
            }
            Structure::ProgressiveWalk { n_layers, step } => SynthOutput {
                models: vec![gen_progressive_stack(n, d, n_layers, step, seed, "walk")?],
                labels: Vec::new(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imbalance::information_imbalance;
    use crate::Metric;

    #[test]
    fn deterministic() {
        let a = gen_gaussian_clusters(50, 4, 3, 2.0, 9).unwrap();
        let b = gen_gaussian_clusters(50, 4, 3, 2.0, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1[..4], [0, 1, 2, 0]);
    }

    #[test]
    fn two_process_shares_last_layer() {
        let tp = gen_two_process(120, 4).unwrap();
        assert_eq!(tp.stack_a[2].values(), tp.stack_b[2].values());
        let d = information_imbalance(&tp.stack_a[2], &tp.stack_b[2], Metric::Euclidean).unwrap();
        assert_eq!(d, 2.0 / 120.0);
        assert!(gen_two_process(99, 4).is_err());
    }

    #[test]
    fn zero_noise_copy_is_identical() {
        let (base, _) = gen_gaussian_clusters(30, 5, 2, 1.0, 1).unwrap();
        assert_eq!(gen_noisy_copy(&base, 0.0, 8).unwrap(), base);
    }

    #[test]
    fn images() {
        let img = gen_synthetic_image(ImageKind::StepEdge { column: 2 }, 4, 3, 0).unwrap();
        assert_eq!(img.samples()[..4], [0, 0, 255, 255]);
        let img = gen_synthetic_image(ImageKind::Stripes { width: 1 }, 3, 3, 0).unwrap();
        assert_eq!(img.samples()[..3], [0, 255, 0]);
        assert!(gen_synthetic_image(ImageKind::Noise, 2, 9, 0).is_err());
        let a = gen_synthetic_image(ImageKind::Noise, 5, 5, 3).unwrap();
        assert_eq!(a, gen_synthetic_image(ImageKind::Noise, 5, 5, 3).unwrap());
        assert_eq!(a.channels(), 3);
    }

    #[test]
    fn spec_generates_stacks() {
        let out = SynthSpec {
            n_points: 20,
            dim: 3,
            seed: 2,
            structure: Structure::ProgressiveWalk { n_layers: 4, step: 0.1 },
        }
        .generate()
        .unwrap();
        assert_eq!(out.models[0].len(), 4);
        assert_eq!(out.models[0][3].layer().layer_index(), 3);
        let out = SynthSpec { n_points: 20, dim: 3, seed: 2, structure: Structure::ShuffledCopy }.generate().unwrap();
        assert_eq!(out.models[0][1].layer().model_name(), "shuffled_copy");
    }
}
