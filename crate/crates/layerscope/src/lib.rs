//! File formats, manifest-level pipelines and the command line around
//! [`layerscope_core`].

pub mod cli;
pub mod embstore;
pub mod error;
pub mod labels;
pub mod manifest;
pub mod pipeline;
pub mod pnm;
pub mod report;

pub use error::{Error, Result};
pub use layerscope_core as core;
