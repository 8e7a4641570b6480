use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Identifies one layer of one model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerRef {
    model_name: String,
    layer_index: usize,
    layer_count: usize,
}

impl LayerRef {
    pub fn new(model_name: impl Into<String>, layer_index: usize, layer_count: usize) -> Result<Self> {
        if layer_index >= layer_count {
            return Err(Error::InvalidLayer { index: layer_index, count: layer_count });
        }
        Ok(Self { model_name: model_name.into(), layer_index, layer_count })
    }

    /// A placeholder reference for matrices that do not belong to a model stack.
    pub fn anonymous() -> Self {
        Self { model_name: String::new(), layer_index: 0, layer_count: 1 }
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn layer_index(&self) -> usize {
        self.layer_index
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    /// Relative depth `index / (count - 1)`, 0 for single-layer models.
    pub fn depth_fraction(&self) -> f64 {
        if self.layer_count <= 1 {
            0.0
        } else {
            self.layer_index as f64 / (self.layer_count - 1) as f64
        }
    }
}

/// Activations of one layer for a fixed, ordered set of images.
///
/// Row `i` of every matrix in an analysis refers to the same image. Values are
/// stored as `f32` row-major; all distance arithmetic is done in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_points: usize,
    dim: usize,
    values: Vec<f32>,
    layer: LayerRef,
}

impl EmbeddingMatrix {
    pub fn new(n_points: usize, dim: usize, values: Vec<f32>, layer: LayerRef) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::TooFewPoints(n_points));
        }
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        let expected =
            n_points.checked_mul(dim).ok_or(Error::ShapeMismatch { expected: usize::MAX, actual: values.len() })?;
        if values.len() != expected {
            return Err(Error::ShapeMismatch { expected, actual: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { n_points, dim, values, layer })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], layer: LayerRef) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, values, layer)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn layer(&self) -> &LayerRef {
        &self.layer
    }

    pub fn with_layer(mut self, layer: LayerRef) -> Self {
        self.layer = layer;
        self
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f32> {
        self.values.chunks_exact(self.dim)
    }

    /// Copies the given rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n_points {
                return Err(Error::IndexOutOfRange { index: i, len: self.n_points });
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.dim, values, self.layer.clone())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n_points {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.n_points })
        }
    }
}
