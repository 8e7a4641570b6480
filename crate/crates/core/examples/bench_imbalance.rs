use layerscope_core::imbalance::imbalance_both;
use layerscope_core::rng::SplitMix64;
use layerscope_core::{EmbeddingMatrix, LayerRef, Metric};
use std::time::Instant;

fn main() {
    let n: usize = std::env::args().nth(1).map_or(10_000, |s| s.parse().unwrap());
    let d: usize = std::env::args().nth(2).map_or(1024, |s| s.parse().unwrap());
    let mut r = SplitMix64::new(1);
    let a: Vec<f32> = (0..n * d).map(|_| r.normal() as f32).collect();
    let b: Vec<f32> = (0..n * d).map(|_| r.normal() as f32).collect();
    let a = EmbeddingMatrix::new(n, d, a, LayerRef::anonymous()).unwrap();
    let b = EmbeddingMatrix::new(n, d, b, LayerRef::anonymous()).unwrap();
    let t = Instant::now();
    let res = imbalance_both(&a, &b, Metric::Euclidean).unwrap();
    println!("{n}x{d}: {:?} {} {}", t.elapsed(), res.delta_ab, res.delta_ba);
}
