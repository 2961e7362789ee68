use std::path::Path;

use image::{ImageBuffer, Rgb as PngRgb};

use super::FormatError;
use crate::image::{Rgb, RgbImage, Transfer};

/// `round(clamp(v, 0, 1) * 255)`, halves rounded away from zero.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Decodes to display-referred values `v / 255`. Gray, alpha and 16-bit
/// PNGs are converted to 8-bit RGB first.
pub fn read_png8(path: &Path) -> Result<RgbImage, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| FormatError::Png(e.to_string()))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    let data = decoded
        .pixels()
        .map(|p| Rgb::new(p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0))
        .collect();
    Ok(RgbImage::from_pixels(w as usize, h as usize, Transfer::Display, data))
}

pub fn write_png8(img: &RgbImage, path: &Path) -> Result<(), FormatError> {
    let (w, h) = img.dims();
    let buf: ImageBuffer<PngRgb<u8>, Vec<u8>> = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let p = img.get(x as usize, y as usize);
        PngRgb([quantize(p.r), quantize(p.g), quantize(p.b)])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => FormatError::io(path, io),
            other => FormatError::Png(other.to_string()),
        })
}
