//! Forward camera model: renders 8-bit exposures of a linear radiance map.
//!
//! `X = 2^v (key / g(L)) E`, clipped to `[0, 1]`, gamma-encoded as
//! `X^(1/gamma)` and quantized to `round(255 x) / 255`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hue::key_scale;
use crate::image::{RgbImage, Transfer};
use crate::stack::ExposureStack;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub ev: Vec<f64>,
    pub gamma: f64,
    pub key: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ev: vec![-4.0, -2.0, 0.0, 2.0, 4.0],
            gamma: 2.2,
            key: 0.18,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma {}", self.gamma)));
        }
        if self.ev.is_empty() {
            return Err(Error::InvalidParameter("empty EV list".into()));
        }
        if self.ev.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite EV".into()));
        }
        Ok(())
    }
}

/// Multiplier taking `hdr` to the zero-EV exposure, whose regularized
/// luminance geometric mean is exactly `key`.
pub fn key_normalization(hdr: &RgbImage, key: f64) -> Result<f64> {
    key_scale(hdr.luminance().data(), key)
}

/// The linear exposure before clipping.
pub fn linear_exposure(hdr: &RgbImage, v: f64, cfg: &SynthConfig) -> Result<RgbImage> {
    cfg.validate()?;
    let k = v.exp2() * key_normalization(hdr, cfg.key)?;
    Ok(hdr.map(|p| p * k).with_transfer(Transfer::Linear))
}

/// `round(x * 255) / 255`, halves away from zero.
pub fn quantize8(x: f64) -> f64 {
    (x * 255.0).round() / 255.0
}

/// Clip, gamma-encode and quantize a linear exposure.
pub fn encode_exposure(linear: &RgbImage, gamma: f64) -> RgbImage {
    let inv = 1.0 / gamma;
    let data = linear
        .pixels()
        .par_iter()
        .map(|p| p.map(|c| quantize8(c.clamp(0.0, 1.0).powf(inv))))
        .collect();
    RgbImage::from_pixels(linear.width(), linear.height(), Transfer::Display, data)
}

pub fn generate_exposure(hdr: &RgbImage, v: f64, cfg: &SynthConfig) -> Result<RgbImage> {
    Ok(encode_exposure(&linear_exposure(hdr, v, cfg)?, cfg.gamma))
}

/// One exposure per EV, with `dt = 2^v`.
pub fn generate_stack(hdr: &RgbImage, cfg: &SynthConfig) -> Result<ExposureStack> {
    cfg.validate()?;
    let k = key_normalization(hdr, cfg.key)?;
    let images = cfg
        .ev
        .iter()
        .map(|&v| {
            let s = v.exp2() * k;
            encode_exposure(&hdr.map(|p| p * s), cfg.gamma)
        })
        .collect();
    ExposureStack::from_ev(images, &cfg.ev)
}
