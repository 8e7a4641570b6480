//! Neighbor-rank analysis of layer representations.
//!
//! This crate holds the numeric core: exact nearest-neighbor ranks, the
//! information-imbalance metric between two representation spaces, low-level
//! image statistics (Canny edge density, color warmth, Sobel texture) and the
//! neighborhood category share built on them, label-set coherence of
//! neighborhoods, layerwise linear probes with trajectory roughness, and
//! seeded synthetic generators that make all of the above checkable at desk
//! scale.
//!
//! The crate is `no_std` with `alloc`. The `std` feature enables runtime SIMD
//! dispatch for the distance kernels and the `parallel` feature (on by
//! default) spreads independent queries over a rayon pool. Results are
//! bit-identical with and without either feature: every reduction runs in a
//! fixed order.
//!
//! File formats, manifests and the command line live in the `layerscope`
//! companion crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_op_in_unsafe_fn)]

extern crate alloc;

mod error;
mod matrix;

pub mod coherence;
pub mod imbalance;
pub mod knn;
pub mod lowlevel;
pub mod probes;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use knn::{Metric, NeighborhoodSpec};
pub use matrix::{EmbeddingMatrix, LayerRef};
