//! Exact distances, nearest neighbors and rank arrays.
//!
//! Everything here is brute force: every query is compared against every other
//! point. Distances are accumulated in `f64` with a fixed lane layout, so a
//! given pair always produces the same bits no matter which code path (scalar,
//! SIMD, blocked, parallel) computed it. Ties are broken by ascending index,
//! which makes every ordering a total order.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;
use core::str::FromStr;

use crate::{EmbeddingMatrix, Error, Result};

/// Distance used to order neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(a, b)`; zero-norm vectors are rejected.
    Cosine,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" | "cosine_distance" => Ok(Metric::Cosine),
            other => Err(Error::InvalidArgument(alloc::format!("unknown metric `{other}`"))),
        }
    }
}

/// Neighborhood size for k-NN based analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    k: usize,
}

impl NeighborhoodSpec {
    pub const DEFAULT_K: usize = 10;

    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidK { k, n: 0 });
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Checks `1 <= k < n_points`.
    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.k >= 1 && self.k < n_points {
            Ok(())
        } else {
            Err(Error::InvalidK { k: self.k, n: n_points })
        }
    }
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self { k: Self::DEFAULT_K }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// All other points ordered by distance from one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankArray {
    query: usize,
    ordered: Vec<Neighbor>,
}

impl RankArray {
    pub fn query(&self) -> usize {
        self.query
    }

    pub fn ordered(&self) -> &[Neighbor] {
        &self.ordered
    }

    pub fn indices(&self) -> Vec<usize> {
        self.ordered.iter().map(|n| n.index).collect()
    }

    /// 1-based rank of `target`, `None` for the query itself.
    pub fn rank_of(&self, target: usize) -> Option<usize> {
        self.ordered.iter().position(|n| n.index == target).map(|p| p + 1)
    }
}

mod kernel {
    const LANES: usize = 8;

    // Eight independent accumulators combined by a fixed tree. The lane layout,
    // not the instruction set, determines the rounding, so the SIMD and scalar
    // builds agree bit for bit.

    #[inline(always)]
    pub(super) fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
        let mut acc = [0.0f64; LANES];
        let ca = a.chunks_exact(LANES);
        let cb = b.chunks_exact(LANES);
        let (ra, rb) = (ca.remainder(), cb.remainder());
        for (x, y) in ca.zip(cb) {
            for l in 0..LANES {
                let d = f64::from(x[l]) - f64::from(y[l]);
                acc[l] += d * d;
            }
        }
        let mut tail = 0.0;
        for (x, y) in ra.iter().zip(rb) {
            let d = f64::from(*x) - f64::from(*y);
            tail += d * d;
        }
        reduce(&acc) + tail
    }

    #[inline(always)]
    pub(super) fn dot(a: &[f32], b: &[f32]) -> f64 {
        let mut acc = [0.0f64; LANES];
        let ca = a.chunks_exact(LANES);
        let cb = b.chunks_exact(LANES);
        let (ra, rb) = (ca.remainder(), cb.remainder());
        for (x, y) in ca.zip(cb) {
            for l in 0..LANES {
                acc[l] += f64::from(x[l]) * f64::from(y[l]);
            }
        }
        let mut tail = 0.0;
        for (x, y) in ra.iter().zip(rb) {
            tail += f64::from(*x) * f64::from(*y);
        }
        reduce(&acc) + tail
    }

    /// Squared distances from four query rows (already widened to `f64`) to
    /// one candidate row. Each result is bitwise equal to
    /// `sq_dist(query, candidate)`.
    #[inline(always)]
    pub(super) fn sq_dist4(q: [&[f64]; 4], c: &[f32]) -> [f64; 4] {
        let mut a0 = [0.0f64; LANES];
        let mut a1 = [0.0f64; LANES];
        let mut a2 = [0.0f64; LANES];
        let mut a3 = [0.0f64; LANES];
        let chunks = c
            .chunks_exact(LANES)
            .zip(q[0].chunks_exact(LANES))
            .zip(q[1].chunks_exact(LANES))
            .zip(q[2].chunks_exact(LANES))
            .zip(q[3].chunks_exact(LANES));
        for ((((y, x0), x1), x2), x3) in chunks {
            let y: [f64; LANES] = core::array::from_fn(|l| f64::from(y[l]));
            for l in 0..LANES {
                let d = x0[l] - y[l];
                a0[l] += d * d;
                let d = x1[l] - y[l];
                a1[l] += d * d;
                let d = x2[l] - y[l];
                a2[l] += d * d;
                let d = x3[l] - y[l];
                a3[l] += d * d;
            }
        }
        let full = c.len() / LANES * LANES;
        let tail = |x: &[f64]| {
            let mut t = 0.0;
            for (x, y) in x[full..].iter().zip(&c[full..]) {
                let d = *x - f64::from(*y);
                t += d * d;
            }
            t
        };
        [finish(&a0, tail(q[0])), finish(&a1, tail(q[1])), finish(&a2, tail(q[2])), finish(&a3, tail(q[3]))]
    }

    /// Dot products of four widened query rows with one candidate row,
    /// bitwise equal to `dot(query, candidate)`.
    #[inline(always)]
    pub(super) fn dot4(q: [&[f64]; 4], c: &[f32]) -> [f64; 4] {
        let mut a0 = [0.0f64; LANES];
        let mut a1 = [0.0f64; LANES];
        let mut a2 = [0.0f64; LANES];
        let mut a3 = [0.0f64; LANES];
        let chunks = c
            .chunks_exact(LANES)
            .zip(q[0].chunks_exact(LANES))
            .zip(q[1].chunks_exact(LANES))
            .zip(q[2].chunks_exact(LANES))
            .zip(q[3].chunks_exact(LANES));
        for ((((y, x0), x1), x2), x3) in chunks {
            let y: [f64; LANES] = core::array::from_fn(|l| f64::from(y[l]));
            for l in 0..LANES {
                a0[l] += x0[l] * y[l];
                a1[l] += x1[l] * y[l];
                a2[l] += x2[l] * y[l];
                a3[l] += x3[l] * y[l];
            }
        }
        let full = c.len() / LANES * LANES;
        let tail = |x: &[f64]| {
            let mut t = 0.0;
            for (x, y) in x[full..].iter().zip(&c[full..]) {
                t += *x * f64::from(*y);
            }
            t
        };
        [finish(&a0, tail(q[0])), finish(&a1, tail(q[1])), finish(&a2, tail(q[2])), finish(&a3, tail(q[3]))]
    }

    /// Pointers to each full `LANES`-wide chunk of the candidate row and of
    /// the four query rows. Callers assert that all rows have one length.
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    #[inline(always)]
    pub(super) fn chunks<'a>(
        q: [&'a [f64]; 4],
        c: &'a [f32],
    ) -> impl Iterator<Item = (*const f32, [*const f64; 4])> + 'a {
        let (cp, qp) = (c.as_ptr(), q.map(|r| r.as_ptr()));
        (0..c.len() / LANES).map(move |i| {
            let at = i * LANES;
            (cp.wrapping_add(at), qp.map(|p| p.wrapping_add(at)))
        })
    }

    #[inline(always)]
    pub(super) fn finish(acc: &[f64; LANES], tail: f64) -> f64 {
        reduce(acc) + tail
    }

    #[inline(always)]
    fn reduce(acc: &[f64; LANES]) -> f64 {
        ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))
    }
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
mod avx2 {
    //! The four-query kernels written with AVX2 intrinsics. Lanes `0..4` and
    //! `4..8` of the scalar layout live in two 256-bit registers; there is no
    //! fused multiply-add, so results match the scalar kernels exactly.

    use core::arch::x86_64::*;

    use super::kernel::{chunks, finish};

    const LANES: usize = 8;

    #[inline(always)]
    unsafe fn spill(lo: __m256d, hi: __m256d) -> [f64; LANES] {
        let mut out = [0.0; LANES];
        // SAFETY: `out` holds 8 f64, both stores are in bounds.
        unsafe {
            _mm256_storeu_pd(out.as_mut_ptr(), lo);
            _mm256_storeu_pd(out.as_mut_ptr().add(4), hi);
        }
        out
    }

    /// # Safety
    /// Requires AVX2; all rows must have the candidate's length.
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn sq_dist4(q: [&[f64]; 4], c: &[f32]) -> [f64; 4] {
        let d = c.len();
        for row in q {
            assert_eq!(row.len(), d);
        }
        let full = d / LANES * LANES;
        let mut acc = [_mm256_setzero_pd(); 8];
        for (y, x) in chunks(q, c) {
            // SAFETY: each pointer starts LANES in-bounds values.
            unsafe {
                let ylo = _mm256_cvtps_pd(_mm_loadu_ps(y));
                let yhi = _mm256_cvtps_pd(_mm_loadu_ps(y.wrapping_add(4)));
                for k in 0..4 {
                    let dlo = _mm256_sub_pd(_mm256_loadu_pd(x[k]), ylo);
                    let dhi = _mm256_sub_pd(_mm256_loadu_pd(x[k].wrapping_add(4)), yhi);
                    acc[2 * k] = _mm256_add_pd(acc[2 * k], _mm256_mul_pd(dlo, dlo));
                    acc[2 * k + 1] = _mm256_add_pd(acc[2 * k + 1], _mm256_mul_pd(dhi, dhi));
                }
            }
        }
        core::array::from_fn(|k| {
            let mut tail = 0.0;
            for (x, y) in q[k][full..].iter().zip(&c[full..]) {
                let diff = *x - f64::from(*y);
                tail += diff * diff;
            }
            // SAFETY: AVX2 is enabled for this function.
            finish(&unsafe { spill(acc[2 * k], acc[2 * k + 1]) }, tail)
        })
    }

    /// # Safety
    /// Requires AVX2; all rows must have the candidate's length.
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn dot4(q: [&[f64]; 4], c: &[f32]) -> [f64; 4] {
        let d = c.len();
        for row in q {
            assert_eq!(row.len(), d);
        }
        let full = d / LANES * LANES;
        let mut acc = [_mm256_setzero_pd(); 8];
        for (y, x) in chunks(q, c) {
            // SAFETY: each pointer starts LANES in-bounds values.
            unsafe {
                let ylo = _mm256_cvtps_pd(_mm_loadu_ps(y));
                let yhi = _mm256_cvtps_pd(_mm_loadu_ps(y.wrapping_add(4)));
                for k in 0..4 {
                    let xlo = _mm256_loadu_pd(x[k]);
                    let xhi = _mm256_loadu_pd(x[k].wrapping_add(4));
                    acc[2 * k] = _mm256_add_pd(acc[2 * k], _mm256_mul_pd(xlo, ylo));
                    acc[2 * k + 1] = _mm256_add_pd(acc[2 * k + 1], _mm256_mul_pd(xhi, yhi));
                }
            }
        }
        core::array::from_fn(|k| {
            let mut tail = 0.0;
            for (x, y) in q[k][full..].iter().zip(&c[full..]) {
                tail += *x * f64::from(*y);
            }
            // SAFETY: AVX2 is enabled for this function.
            finish(&unsafe { spill(acc[2 * k], acc[2 * k + 1]) }, tail)
        })
    }
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
mod avx512 {
    //! The four-query kernels on 512-bit registers: one register holds all
    //! eight lanes of the scalar layout. No fused multiply-add.

    use core::arch::x86_64::*;

    use super::kernel::{chunks, finish};

    const LANES: usize = 8;

    #[inline(always)]
    unsafe fn spill(acc: __m512d) -> [f64; LANES] {
        let mut out = [0.0; LANES];
        // SAFETY: `out` holds 8 f64.
        unsafe { _mm512_storeu_pd(out.as_mut_ptr(), acc) };
        out
    }

    /// # Safety
    /// Requires AVX-512F; all rows must have the candidate's length.
    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn sq_dist4(q: [&[f64]; 4], c: &[f32]) -> [f64; 4] {
        let d = c.len();
        for row in q {
            assert_eq!(row.len(), d);
        }
        let full = d / LANES * LANES;
        let mut acc = [_mm512_setzero_pd(); 4];
        for (y, x) in chunks(q, c) {
            // SAFETY: each pointer starts LANES in-bounds values.
            unsafe {
                let y = _mm512_cvtps_pd(_mm256_loadu_ps(y));
                for k in 0..4 {
                    let diff = _mm512_sub_pd(_mm512_loadu_pd(x[k]), y);
                    acc[k] = _mm512_add_pd(acc[k], _mm512_mul_pd(diff, diff));
                }
            }
        }
        core::array::from_fn(|k| {
            let mut tail = 0.0;
            for (x, y) in q[k][full..].iter().zip(&c[full..]) {
                let diff = *x - f64::from(*y);
                tail += diff * diff;
            }
            // SAFETY: AVX-512F is enabled for this function.
            finish(&unsafe { spill(acc[k]) }, tail)
        })
    }

    /// # Safety
    /// Requires AVX-512F; all rows must have the candidate's length.
    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn dot4(q: [&[f64]; 4], c: &[f32]) -> [f64; 4] {
        let d = c.len();
        for row in q {
            assert_eq!(row.len(), d);
        }
        let full = d / LANES * LANES;
        let mut acc = [_mm512_setzero_pd(); 4];
        for (y, x) in chunks(q, c) {
            // SAFETY: each pointer starts LANES in-bounds values.
            unsafe {
                let y = _mm512_cvtps_pd(_mm256_loadu_ps(y));
                for k in 0..4 {
                    acc[k] = _mm512_add_pd(acc[k], _mm512_mul_pd(_mm512_loadu_pd(x[k]), y));
                }
            }
        }
        core::array::from_fn(|k| {
            let mut tail = 0.0;
            for (x, y) in q[k][full..].iter().zip(&c[full..]) {
                tail += *x * f64::from(*y);
            }
            // SAFETY: AVX-512F is enabled for this function.
            finish(&unsafe { spill(acc[k]) }, tail)
        })
    }
}

#[inline(always)]
fn cosine_from_parts(dot: f64, sq_norm_a: f64, sq_norm_b: f64) -> f64 {
    let c = dot / libm::sqrt(sq_norm_a * sq_norm_b);
    (1.0 - c).clamp(0.0, 2.0)
}

/// Distance between two vectors.
pub fn distance(a: &[f32], b: &[f32], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    if let Some(i) = a.iter().chain(b).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    match metric {
        Metric::Euclidean => Ok(libm::sqrt(kernel::sq_dist(a, b))),
        Metric::Cosine => {
            let na = kernel::dot(a, a);
            let nb = kernel::dot(b, b);
            if na == 0.0 {
                return Err(Error::ZeroVector { index: 0 });
            }
            if nb == 0.0 {
                return Err(Error::ZeroVector { index: 1 });
            }
            Ok(cosine_from_parts(kernel::dot(a, b), na, nb))
        }
    }
}

/// A matrix prepared for repeated distance queries under one metric.
pub struct Space<'a> {
    matrix: &'a EmbeddingMatrix,
    metric: Metric,
    sq_norms: Vec<f64>,
}

/// Queries handled together so that each candidate row is streamed from
/// memory once per block instead of once per query.
pub(crate) const QUERY_BLOCK: usize = 32;

impl<'a> Space<'a> {
    pub fn new(matrix: &'a EmbeddingMatrix, metric: Metric) -> Result<Self> {
        let sq_norms = match metric {
            Metric::Euclidean => Vec::new(),
            Metric::Cosine => {
                let norms: Vec<f64> = matrix.rows().map(|r| kernel::dot(r, r)).collect();
                if let Some(index) = norms.iter().position(|n| *n == 0.0) {
                    return Err(Error::ZeroVector { index });
                }
                norms
            }
        };
        Ok(Self { matrix, metric, sq_norms })
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        self.matrix
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.matrix.n_points()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline(always)]
    fn pair(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.matrix.row(i), self.matrix.row(j));
        match self.metric {
            Metric::Euclidean => libm::sqrt(kernel::sq_dist(a, b)),
            Metric::Cosine => cosine_from_parts(kernel::dot(a, b), self.sq_norms[i], self.sq_norms[j]),
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.pair(i, j)
    }

    /// Distances from `query` to every point (the query's own slot included).
    pub fn distances_from(&self, query: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.fill_block(query..query + 1, &mut out);
        out
    }

    /// Fills `out` (length `queries.len() * n`) with the distance rows of a
    /// contiguous range of queries.
    pub fn fill_block(&self, queries: Range<usize>, out: &mut [f64]) {
        let n = self.len();
        assert_eq!(out.len(), queries.len() * n);
        #[cfg(all(feature = "std", target_arch = "x86_64"))]
        {
            if std::is_x86_feature_detected!("avx512f") {
                // SAFETY: the CPU supports AVX-512F, checked just above.
                let sq = |q: [&[f64]; 4], c: &[f32]| unsafe { avx512::sq_dist4(q, c) };
                let dot = |q: [&[f64]; 4], c: &[f32]| unsafe { avx512::dot4(q, c) };
                self.fill_block_with(queries, out, sq, dot);
                return;
            }
            if std::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports AVX2, checked just above.
                let sq = |q: [&[f64]; 4], c: &[f32]| unsafe { avx2::sq_dist4(q, c) };
                let dot = |q: [&[f64]; 4], c: &[f32]| unsafe { avx2::dot4(q, c) };
                self.fill_block_with(queries, out, sq, dot);
                return;
            }
        }
        self.fill_block_with(queries, out, kernel::sq_dist4, kernel::dot4);
    }

    // Candidate-major loop: each candidate row is read once per block while
    // the widened query rows stay in cache. Queries go through the kernel in
    // groups of four; leftovers use the pairwise path, which yields the same
    // bits.
    #[inline(always)]
    fn fill_block_with<S, D>(&self, queries: Range<usize>, out: &mut [f64], sq4: S, dot4: D)
    where
        S: Fn([&[f64]; 4], &[f32]) -> [f64; 4],
        D: Fn([&[f64]; 4], &[f32]) -> [f64; 4],
    {
        let n = self.len();
        let d = self.matrix.dim();
        let count = queries.len();
        let grouped = count / 4 * 4;
        let widened: Vec<f64> = self.matrix.values()[queries.start * d..(queries.start + grouped) * d]
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let wrow = |i: usize| &widened[i * d..(i + 1) * d];
        for m in 0..n {
            let c = self.matrix.row(m);
            match self.metric {
                Metric::Euclidean => {
                    for g in (0..grouped).step_by(4) {
                        let dist = sq4([wrow(g), wrow(g + 1), wrow(g + 2), wrow(g + 3)], c);
                        for (i, v) in dist.into_iter().enumerate() {
                            out[(g + i) * n + m] = libm::sqrt(v);
                        }
                    }
                }
                Metric::Cosine => {
                    for g in (0..grouped).step_by(4) {
                        let dots = dot4([wrow(g), wrow(g + 1), wrow(g + 2), wrow(g + 3)], c);
                        let q0 = queries.start + g;
                        for (i, v) in dots.into_iter().enumerate() {
                            out[(g + i) * n + m] = cosine_from_parts(v, self.sq_norms[q0 + i], self.sq_norms[m]);
                        }
                    }
                }
            }
            for r in grouped..count {
                out[r * n + m] = self.pair(queries.start + r, m);
            }
        }
    }
}

/// Runs `f` over consecutive query blocks of `0..n` and returns the results in
/// block order. Blocks run in parallel when the `parallel` feature is on.
pub(crate) fn map_blocks<T, F>(n: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let n_blocks = n.div_ceil(block);
    let range = move |b: usize| b * block..((b + 1) * block).min(n);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_blocks).into_par_iter().map(|b| f(range(b))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_blocks).map(|b| f(range(b))).collect()
    }
}

/// Index of the nearest point to `query` in a distance row, lowest index on ties.
#[inline]
pub(crate) fn nearest_in_row(row: &[f64], query: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (j, &d) in row.iter().enumerate() {
        if j != query && (d < best_d || best == usize::MAX) {
            best = j;
            best_d = d;
        }
    }
    best
}

/// 1-based rank of `target` in a distance row under the (distance, index) order.
#[inline]
pub(crate) fn rank_in_row(row: &[f64], query: usize, target: usize) -> usize {
    let dt = row[target];
    let mut ahead = 0usize;
    for (j, &d) in row.iter().enumerate() {
        if j != query && j != target && (d < dt || (d == dt && j < target)) {
            ahead += 1;
        }
    }
    ahead + 1
}

#[inline]
fn neighbor_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index))
}

/// The `k` first neighbors of `query` in a distance row.
pub(crate) fn top_k_in_row(row: &[f64], query: usize, k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = row
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != query)
        .map(|(index, &distance)| Neighbor { index, distance })
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k, neighbor_order);
        all.truncate(k);
    }
    all.sort_unstable_by(neighbor_order);
    all
}

/// Full rank array of `query`: every other point, nearest first.
pub fn rank_array(matrix: &EmbeddingMatrix, query: usize, metric: Metric) -> Result<RankArray> {
    matrix.check_index(query)?;
    let space = Space::new(matrix, metric)?;
    let row = space.distances_from(query);
    let mut ordered: Vec<Neighbor> = row
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != query)
        .map(|(index, &distance)| Neighbor { index, distance })
        .collect();
    ordered.sort_unstable_by(neighbor_order);
    Ok(RankArray { query, ordered })
}

/// Indices of the `k` nearest neighbors of `query`.
pub fn k_nearest(matrix: &EmbeddingMatrix, query: usize, spec: NeighborhoodSpec, metric: Metric) -> Result<Vec<usize>> {
    spec.validate(matrix.n_points())?;
    matrix.check_index(query)?;
    let space = Space::new(matrix, metric)?;
    let row = space.distances_from(query);
    Ok(top_k_in_row(&row, query, spec.k()).into_iter().map(|n| n.index).collect())
}

/// 1-based position of `target` in the rank array of `query`.
pub fn rank_of(matrix: &EmbeddingMatrix, query: usize, target: usize, metric: Metric) -> Result<usize> {
    matrix.check_index(query)?;
    matrix.check_index(target)?;
    if query == target {
        return Err(Error::SameIndex(query));
    }
    let space = Space::new(matrix, metric)?;
    let row = space.distances_from(query);
    Ok(rank_in_row(&row, query, target))
}

/// k nearest neighbors (with distances) for a list of queries.
pub fn k_nearest_many(
    matrix: &EmbeddingMatrix,
    queries: &[usize],
    spec: NeighborhoodSpec,
    metric: Metric,
) -> Result<Vec<Vec<Neighbor>>> {
    spec.validate(matrix.n_points())?;
    for &q in queries {
        matrix.check_index(q)?;
    }
    let space = Space::new(matrix, metric)?;
    let n = matrix.n_points();
    let per_block = map_blocks(queries.len(), QUERY_BLOCK, |r| {
        let mut row = vec![0.0; n];
        r.map(|i| {
            let q = queries[i];
            space.fill_block(q..q + 1, &mut row);
            top_k_in_row(&row, q, spec.k())
        })
        .collect::<Vec<_>>()
    });
    Ok(per_block.into_iter().flatten().collect())
}

/// k nearest neighbor indices of every point.
pub fn k_nearest_all(matrix: &EmbeddingMatrix, spec: NeighborhoodSpec, metric: Metric) -> Result<Vec<Vec<usize>>> {
    spec.validate(matrix.n_points())?;
    let space = Space::new(matrix, metric)?;
    let n = matrix.n_points();
    let per_block = map_blocks(n, QUERY_BLOCK, |r| {
        let mut buf = vec![0.0; r.len() * n];
        space.fill_block(r.clone(), &mut buf);
        r.clone()
            .zip(buf.chunks_exact(n))
            .map(|(q, row)| top_k_in_row(row, q, spec.k()).into_iter().map(|nb| nb.index).collect())
            .collect::<Vec<Vec<usize>>>()
    });
    Ok(per_block.into_iter().flatten().collect())
}
