//! Image file formats: Radiance `.hdr` (RGBE), PFM and 8-bit PNG.
//!
//! `.hdr` and `.pfm` decode to linear images, PNG to display-referred ones.

mod pfm;
mod png;
mod rgbe;

use std::path::Path;

use thiserror::Error;

pub use self::pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use self::png::{quantize, read_png8, write_png8};
pub use self::rgbe::{
    decode_radiance_hdr, encode_radiance_hdr, float_to_rgbe, read_radiance_hdr, rgbe_to_float, write_radiance_hdr,
};

use crate::image::RgbImage;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: not a {0} file")]
    BadMagic(&'static str),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("unsupported orientation {0:?}")]
    UnsupportedOrientation(String),

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("truncated data: {0}")]
    Truncated(String),

    #[error("corrupt scanline {row}: {reason}")]
    Scanline { row: usize, reason: String },

    #[error("png: {0}")]
    Png(String),

    #[error("curve file: {0}")]
    Curve(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FormatError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    RadianceHdr,
    Pfm,
    Png8,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "hdr" | "pic" | "rgbe" => Some(ImageFormat::RadianceHdr),
            "pfm" => Some(ImageFormat::Pfm),
            "png" => Some(ImageFormat::Png8),
            _ => None,
        }
    }
}

/// Reads any supported format, picked by extension.
pub fn read_image(path: &Path) -> Result<RgbImage, FormatError> {
    match ImageFormat::from_path(path) {
        Some(ImageFormat::RadianceHdr) => read_radiance_hdr(path),
        Some(ImageFormat::Pfm) => read_pfm(path),
        Some(ImageFormat::Png8) => read_png8(path),
        None => Err(FormatError::Unsupported(format!(
            "unknown extension on {}",
            path.display()
        ))),
    }
}

/// Writes any supported format, picked by extension.
pub fn write_image(img: &RgbImage, path: &Path) -> Result<(), FormatError> {
    match ImageFormat::from_path(path) {
        Some(ImageFormat::RadianceHdr) => write_radiance_hdr(img, path),
        Some(ImageFormat::Pfm) => write_pfm(img, path),
        Some(ImageFormat::Png8) => write_png8(img, path),
        None => Err(FormatError::Unsupported(format!(
            "unknown extension on {}",
            path.display()
        ))),
    }
}
