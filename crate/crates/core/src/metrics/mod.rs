//! Objective scores: mean CIEDE2000 hue difference against an HDR reference,
//! and TMQI.

mod ciede2000;
mod lab;
mod tmqi;

use rayon::prelude::*;
use serde::Serialize;

pub use self::ciede2000::{ciede2000, Ciede2000, VERIFICATION_PAIRS};
pub use self::lab::{pixel_to_lab, rgb_to_lab, Lab, Linearize};
pub use self::tmqi::{naturalness, structural_fidelity, tmqi, tmqi_with, Tmqi, TmqiParams};

use crate::error::{check_dims, Result};
use crate::hue::key_scale;
use crate::image::{RgbImage, Transfer};
use crate::stats;

/// Display gamma used to linearize fused images before conversion to Lab.
pub const DISPLAY_GAMMA: f64 = 2.2;
pub const KEY_VALUE: f64 = 0.18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mean_dh: f64,
    pub tmqi_q: f64,
    pub tmqi_s: f64,
    pub tmqi_n: f64,
    pub crf_mse: Option<[f64; 3]>,
}

/// Scales `hdr` so its luminance geometric mean is the key value, then clips
/// to `[0, 1]`. This is the zero-EV exposure before gamma and quantization.
pub fn prepare_reference(hdr: &RgbImage) -> Result<RgbImage> {
    let k = key_scale(hdr.luminance().data(), KEY_VALUE)?;
    Ok(hdr.map(|p| (p * k).clamp01()).with_transfer(Transfer::Linear))
}

/// Mean `|dH|` between `fused` (display values, decoded with gamma 2.2) and
/// the prepared reference.
pub fn mean_hue_difference(fused: &RgbImage, hdr: &RgbImage) -> Result<f64> {
    mean_hue_difference_with(fused, hdr, Linearize::Gamma(DISPLAY_GAMMA))
}

pub fn mean_hue_difference_with(fused: &RgbImage, hdr: &RgbImage, fused_lin: Linearize) -> Result<f64> {
    check_dims(hdr.dims(), fused.dims())?;
    let reference = prepare_reference(hdr)?;
    let dh: Vec<f64> = fused
        .pixels()
        .par_iter()
        .zip(reference.pixels())
        .map(|(&f, &r)| {
            ciede2000(pixel_to_lab(r, Linearize::Linear), pixel_to_lab(f, fused_lin))
                .dh
                .abs()
        })
        .collect();
    Ok(stats::mean(&dh))
}

/// Hue difference and TMQI in one report.
pub fn evaluate(fused: &RgbImage, hdr: &RgbImage) -> Result<MetricsReport> {
    evaluate_with(fused, hdr, &TmqiParams::default())
}

pub fn evaluate_with(fused: &RgbImage, hdr: &RgbImage, p: &TmqiParams) -> Result<MetricsReport> {
    let mean_dh = mean_hue_difference(fused, hdr)?;
    let t = tmqi_with(fused, hdr, p)?;
    Ok(MetricsReport {
        mean_dh,
        tmqi_q: t.q,
        tmqi_s: t.s,
        tmqi_n: t.n,
        crf_mse: None,
    })
}
