//! EMB1 embedding files.
//!
//! A file is one line of UTF-8 JSON ending in `\n`,
//!
//! ```text
//! {"format":"EMB1","n":4,"d":2,"dtype":"f32le","model":"vit","layer":3,"layer_count":12}
//! ```
//!
//! followed by `n * d` little-endian IEEE 754 binary32 values, row-major.
//! `layer_count` is optional when reading.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use layerscope_core::{EmbeddingMatrix, LayerRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "EMB1";
pub const DTYPE: &str = "f32le";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub n: usize,
    pub d: usize,
    pub dtype: String,
    pub model: String,
    pub layer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_count: Option<usize>,
}

impl Header {
    fn for_layer(n: usize, d: usize, layer: &LayerRef) -> Self {
        Header {
            format: FORMAT.into(),
            n,
            d,
            dtype: DTYPE.into(),
            model: layer.model_name().into(),
            layer: layer.layer_index(),
            layer_count: Some(layer.layer_count()),
        }
    }

    fn payload_len(&self) -> u64 {
        self.n as u64 * self.d as u64 * 4
    }

    fn layer_ref(&self) -> layerscope_core::Result<LayerRef> {
        LayerRef::new(self.model.clone(), self.layer, self.layer_count.unwrap_or(self.layer + 1))
    }
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_values(matrix.n_points(), matrix.dim(), matrix.values(), matrix.layer(), path)
}

/// Writes raw values; non-finite values and shape errors are rejected before
/// the file is created.
pub fn write_values(n: usize, d: usize, values: &[f32], layer: &LayerRef, path: &Path) -> Result<()> {
    if values.len() != n * d {
        return Err(layerscope_core::Error::ShapeMismatch { expected: n * d, actual: values.len() }.into());
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(layerscope_core::Error::NonFinite { index }.into());
    }
    let header = serde_json::to_string(&Header::for_layer(n, d, layer)).expect("header serializes");
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        out.write_all(header.as_bytes())?;
        out.write_all(b"\n")?;
        for v in values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

fn parse_header(path: &Path, line: &[u8]) -> Result<Header> {
    let malformed = |reason: String| Error::MalformedHeader { path: path.to_path_buf(), reason };
    let text = std::str::from_utf8(line).map_err(|_| malformed("not UTF-8".into()))?;
    let header: Header = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    if header.format != FORMAT {
        return Err(malformed(format!("format is `{}`, expected `{FORMAT}`", header.format)));
    }
    if header.dtype != DTYPE {
        return Err(malformed(format!("dtype is `{}`, expected `{DTYPE}`", header.dtype)));
    }
    Ok(header)
}

fn split_header<'a>(path: &Path, bytes: &'a [u8]) -> Result<(&'a [u8], &'a [u8])> {
    let end = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: "no newline-terminated header line".into(),
    })?;
    Ok((&bytes[..end], &bytes[end + 1..]))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (line, payload) = split_header(path, &bytes)?;
    let header = parse_header(path, line)?;
    if payload.len() as u64 != header.payload_len() {
        return Err(Error::PayloadLength {
            path: path.to_path_buf(),
            expected: header.payload_len(),
            actual: payload.len() as u64,
        });
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(EmbeddingMatrix::new(header.n, header.d, values, header.layer_ref()?)?)
}

/// Header of an EMB1 file, with the payload length checked against the file
/// size but not read.
pub fn read_header(path: &Path) -> Result<Header> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let size = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut head = Vec::new();
    let mut chunk = [0u8; 512];
    loop {
        let got = file.read(&mut chunk).map_err(|e| Error::io(path, e))?;
        head.extend_from_slice(&chunk[..got]);
        if got == 0 || chunk[..got].contains(&b'\n') || head.len() > 1 << 20 {
            break;
        }
    }
    let (line, _) = split_header(path, &head)?;
    let header = parse_header(path, line)?;
    let actual = size - line.len() as u64 - 1;
    if actual != header.payload_len() {
        return Err(Error::PayloadLength { path: path.to_path_buf(), expected: header.payload_len(), actual });
    }
    Ok(header)
}
