//! Canny edge detection.
//!
//! Luminance scaled to `[0, 1]` is smoothed with a sampled Gaussian (radius
//! `ceil(3 sigma)`, replicated borders), differentiated with the 3x3 Sobel
//! pair, thinned by non-maximum suppression along four quantized gradient
//! directions, and finally double-thresholded with hysteresis over
//! 8-connected pixels. Gradient magnitudes are divided by `4 * sqrt(2)`, an
//! upper bound of the Sobel magnitude on a `[0, 1]` image, so thresholds are
//! absolute and comparable across images. The one-pixel frame carries no
//! gradient and is never an edge.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use super::ImageRaster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub gaussian_sigma: f64,
    /// Hysteresis thresholds on the normalized gradient magnitude.
    pub low_threshold: f64,
    pub high_threshold: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self { gaussian_sigma: 1.4, low_threshold: 0.1, high_threshold: 0.3 }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma.is_finite() && self.gaussian_sigma > 0.0) {
            return Err(Error::InvalidCannyParams(format!("sigma {} must be positive", self.gaussian_sigma)));
        }
        if !(self.low_threshold > 0.0 && self.low_threshold < self.high_threshold && self.high_threshold.is_finite()) {
            return Err(Error::InvalidCannyParams(format!(
                "thresholds must satisfy 0 < low < high, got low={} high={}",
                self.low_threshold, self.high_threshold
            )));
        }
        Ok(())
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|x| libm::exp(-((x * x) as f64) / (2.0 * sigma * sigma))).collect();
    let total: f64 = k.iter().sum();
    for w in &mut k {
        *w /= total;
    }
    k
}

fn blur(img: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut horizontal = vec![0.0; img.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sx = clamp(x as isize + k as isize - radius, width);
                acc += w * img[y * width + sx];
            }
            horizontal[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; img.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sy = clamp(y as isize + k as isize - radius, height);
                acc += w * horizontal[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Sobel responses `(gx, gy)` at an interior pixel.
#[inline]
pub(super) fn sobel_at(img: &[f64], width: usize, x: usize, y: usize) -> (f64, f64) {
    let p = |dx: isize, dy: isize| img[(y as isize + dy) as usize * width + (x as isize + dx) as usize];
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    (gx, gy)
}

/// Neighbor offset along the gradient, quantized to 0, 45, 90 or 135 degrees.
fn quantized_direction(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = libm::atan2(gy, gx) * 180.0 / PI;
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Edge map (row-major, `true` = edge pixel) of the full Canny pipeline.
pub fn canny_edges(img: &ImageRaster, params: &CannyParams) -> Result<Vec<bool>> {
    params.validate()?;
    img.require_filter_support()?;
    let (w, h) = (img.width(), img.height());
    let lum: Vec<f64> = img.luminance().into_iter().map(|v| v / 255.0).collect();
    let smooth = blur(&lum, w, h, params.gaussian_sigma);

    let norm = 4.0 * SQRT_2;
    let mut magnitude = vec![0.0; w * h];
    let mut direction = vec![(0isize, 0isize); w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy) = sobel_at(&smooth, w, x, y);
            magnitude[y * w + x] = libm::sqrt(gx * gx + gy * gy) / norm;
            direction[y * w + x] = quantized_direction(gx, gy);
        }
    }

    // Ties along the gradient keep the pixel on the positive side only, so a
    // symmetric ridge yields a one-pixel line.
    let mut thin = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = direction[i];
            let fwd = magnitude[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let back = magnitude[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            if m > fwd && m >= back {
                thin[i] = m;
            }
        }
    }

    let mut edges = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= params.high_threshold {
            edges[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edges[j] && thin[j] >= params.low_threshold {
                    edges[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    Ok(edges)
}

/// Fraction of pixels marked as Canny edges.
pub fn edge_density(img: &ImageRaster, params: &CannyParams) -> Result<f64> {
    let edges = canny_edges(img, params)?;
    let count = edges.iter().filter(|e| **e).count();
    Ok(count as f64 / edges.len() as f64)
}
