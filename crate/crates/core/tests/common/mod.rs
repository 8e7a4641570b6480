//! Plain reference implementations used as test oracles. They share no code
//! with the library: distances are accumulated left to right, rank arrays
//! come from a full sort, and the imbalance is averaged over queries directly.
#![allow(dead_code)]

use layerscope_core::rng::SplitMix64;
use layerscope_core::{EmbeddingMatrix, LayerRef, Metric};

pub fn naive_distance(a: &[f32], b: &[f32], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => {
            let mut s = 0.0f64;
            for i in 0..a.len() {
                let d = a[i] as f64 - b[i] as f64;
                s += d * d;
            }
            s.sqrt()
        }
        Metric::Cosine => {
            let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
            for i in 0..a.len() {
                ab += a[i] as f64 * b[i] as f64;
                aa += a[i] as f64 * a[i] as f64;
                bb += b[i] as f64 * b[i] as f64;
            }
            (1.0 - ab / (aa * bb).sqrt()).clamp(0.0, 2.0)
        }
    }
}

pub fn naive_rank_array(m: &EmbeddingMatrix, q: usize, metric: Metric) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> =
        (0..m.n_points()).filter(|&j| j != q).map(|j| (naive_distance(m.row(q), m.row(j), metric), j)).collect();
    others.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    others.into_iter().map(|(_, j)| j).collect()
}

pub fn naive_imbalance(a: &EmbeddingMatrix, b: &EmbeddingMatrix, metric: Metric) -> f64 {
    let n = a.n_points();
    let mut total = 0.0;
    for i in 0..n {
        let nn = naive_rank_array(a, i, metric)[0];
        let rank = naive_rank_array(b, i, metric).iter().position(|&j| j == nn).unwrap() + 1;
        total += rank as f64;
    }
    2.0 / n as f64 * (total / n as f64)
}

pub fn gaussian(n: usize, d: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = SplitMix64::new(seed);
    let values = (0..n * d).map(|_| rng.normal() as f32).collect();
    EmbeddingMatrix::new(n, d, values, LayerRef::anonymous()).unwrap()
}

pub fn from_rows(rows: &[Vec<f32>]) -> EmbeddingMatrix {
    EmbeddingMatrix::from_rows(rows, LayerRef::anonymous()).unwrap()
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
