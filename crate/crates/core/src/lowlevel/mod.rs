//! Low-level image statistics and the neighborhood category share.
//!
//! Three properties are measured per image: edge density (fraction of Canny
//! edge pixels), color warmth (mean red minus mean blue) and texture
//! complexity (spread of Sobel gradient magnitudes). Each property is split
//! into low/mid/high groups of equal size, and a layer is scored by how many
//! of an image's nearest neighbors fall into one of its groups.

mod categories;
mod edges;
mod features;
mod raster;

pub use categories::{
    analytic_baseline, category_share, discretize, per_property_share, random_baseline, CategoryAssignment,
    CategoryTable, Level, Property,
};
pub use edges::{canny_edges, edge_density, CannyParams};
pub use features::{color_warmth, profile, sobel_magnitudes, texture_complexity, LowLevelProfile};
pub use raster::ImageRaster;
