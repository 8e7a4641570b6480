use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A decoded 8-bit image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!("{channels} channels, expected 1 or 3")));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(Error::InvalidRaster(format!("{} samples, expected {expected}", samples.len())));
        }
        Ok(Self { width, height, channels, samples })
    }

    /// An image where every pixel is `pixel` (1 or 3 samples).
    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Result<Self> {
        let samples = pixel.iter().copied().cycle().take(width * height * pixel.len()).collect();
        Self::new(width, height, pixel.len(), samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Luminance `0.299 R + 0.587 G + 0.114 B` on the 0..=255 scale.
    ///
    /// The weighted sum is formed in integers (weights 299/587/114 out of
    /// 1000), so a gray pixel with `R = G = B = v` maps to exactly `v`, the
    /// same value a one-channel image gives.
    pub fn luminance(&self) -> Vec<f64> {
        match self.channels {
            1 => self.samples.iter().map(|&v| f64::from(v)).collect(),
            _ => self
                .samples
                .chunks_exact(3)
                .map(|p| {
                    let weighted = 299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]);
                    f64::from(weighted) / 1000.0
                })
                .collect(),
        }
    }

    pub(crate) fn require_filter_support(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            Err(Error::ImageTooSmall { width: self.width, height: self.height })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gray_luminance_is_exact() {
        let rgb = ImageRaster::new(2, 1, 3, vec![17, 17, 17, 254, 254, 254]).unwrap();
        assert_eq!(rgb.luminance(), vec![17.0, 254.0]);
        let red = ImageRaster::filled(1, 1, &[255, 0, 0]).unwrap();
        assert_eq!(red.luminance(), vec![76.245]);
    }

    #[test]
    fn validation() {
        assert!(ImageRaster::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(ImageRaster::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(ImageRaster::new(0, 2, 1, vec![]).is_err());
        assert!(ImageRaster::new(2, 2, 3, vec![0; 12]).is_ok());
    }
}
