//! Binary PGM (`P5`) and PPM (`P6`) images with a maximum value of 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use layerscope_core::lowlevel::ImageRaster;

use crate::error::{Error, Result};

fn image_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Image { path: path.to_path_buf(), reason: reason.into() }
}

/// Reads the next header token, skipping whitespace and `#` comments.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

pub fn decode_image(path: &Path) -> Result<ImageRaster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bytes(path, &bytes)
}

pub fn decode_bytes(path: &Path, bytes: &[u8]) -> Result<ImageRaster> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(image_error(path, "unsupported format: expected binary PGM (P5) or PPM (P6)")),
    };
    let mut pos = 2;
    let mut number = |name: &str| -> Result<usize> {
        let t = token(bytes, &mut pos).ok_or_else(|| image_error(path, format!("truncated header, missing {name}")))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| image_error(path, format!("invalid {name}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(image_error(path, format!("maxval {maxval} is not supported, expected 255")));
    }
    // Exactly one whitespace byte separates the header from the samples.
    let start = pos + 1;
    let len = width * height * channels;
    if bytes.len() < start + len {
        return Err(image_error(
            path,
            format!("truncated payload: {} of {len} bytes", bytes.len().saturating_sub(start)),
        ));
    }
    ImageRaster::new(width, height, channels, bytes[start..start + len].to_vec()).map_err(Error::from)
}

pub fn encode_image(img: &ImageRaster, path: &Path) -> Result<()> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = Vec::with_capacity(img.samples().len() + 20);
    write!(out, "{magic}\n{} {}\n255\n", img.width(), img.height()).expect("write to vec");
    out.extend_from_slice(img.samples());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
