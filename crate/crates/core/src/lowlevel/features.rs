use alloc::vec::Vec;

use super::edges::sobel_at;
use super::{edge_density, CannyParams, ImageRaster};
use crate::{Error, Result};

/// The three low-level properties of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowLevelProfile {
    pub edge_density: f64,
    pub warmth: f64,
    pub texture: f64,
}

/// Mean red minus mean blue, on the raw 0..=255 scale.
pub fn color_warmth(img: &ImageRaster) -> Result<f64> {
    if img.channels() != 3 {
        return Err(Error::NotColor { channels: img.channels() });
    }
    let (mut red, mut blue) = (0u64, 0u64);
    for p in img.samples().chunks_exact(3) {
        red += u64::from(p[0]);
        blue += u64::from(p[2]);
    }
    let pixels = (img.width() * img.height()) as f64;
    Ok((red as f64 - blue as f64) / pixels)
}

/// Sobel gradient magnitudes of the luminance over interior pixels, row-major.
pub fn sobel_magnitudes(img: &ImageRaster) -> Result<Vec<f64>> {
    img.require_filter_support()?;
    let (w, h) = (img.width(), img.height());
    let lum = img.luminance();
    let mut out = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy) = sobel_at(&lum, w, x, y);
            out.push(libm::sqrt(gx * gx + gy * gy));
        }
    }
    Ok(out)
}

/// Population standard deviation of the interior Sobel magnitudes.
pub fn texture_complexity(img: &ImageRaster) -> Result<f64> {
    let mags = sobel_magnitudes(img)?;
    Ok(crate::stats::population_std(&mags).unwrap_or(0.0))
}

pub fn profile(img: &ImageRaster, params: &CannyParams) -> Result<LowLevelProfile> {
    Ok(LowLevelProfile {
        edge_density: edge_density(img, params)?,
        warmth: color_warmth(img)?,
        texture: texture_complexity(img)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmth_extremes() {
        let red = ImageRaster::filled(4, 4, &[255, 0, 0]).unwrap();
        let blue = ImageRaster::filled(4, 4, &[0, 0, 255]).unwrap();
        let gray = ImageRaster::filled(4, 4, &[77, 77, 77]).unwrap();
        assert_eq!(color_warmth(&red).unwrap(), 255.0);
        assert_eq!(color_warmth(&blue).unwrap(), -255.0);
        assert_eq!(color_warmth(&gray).unwrap(), 0.0);
        let mono = ImageRaster::filled(4, 4, &[77]).unwrap();
        assert_eq!(color_warmth(&mono), Err(Error::NotColor { channels: 1 }));
    }

    #[test]
    fn texture_of_constant_and_stripes() {
        let flat = ImageRaster::filled(8, 8, &[40]).unwrap();
        assert_eq!(texture_complexity(&flat).unwrap(), 0.0);
        let stripes: Vec<u8> = (0..64).map(|i| if (i % 8) % 6 < 3 { 0 } else { 255 }).collect();
        let img = ImageRaster::new(8, 8, 1, stripes).unwrap();
        assert!(texture_complexity(&img).unwrap() > 0.0);
        assert!(texture_complexity(&ImageRaster::filled(2, 2, &[1]).unwrap()).is_err());
    }
}
