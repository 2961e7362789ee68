//! Exposure fusion in the style of Mertens, Kautz and Van Reeth: per-pixel
//! quality weights (contrast, saturation, well-exposedness) blended across a
//! Laplacian pyramid.

pub mod pyramid;

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::filter::laplacian;
use crate::image::{Plane, RgbImage, Transfer};

pub use pyramid::{collapse, expand, gaussian_pyramid, laplacian_pyramid, max_levels, reduce};

/// Added to every raw weight so that all-zero pixels still normalize.
pub const WEIGHT_FLOOR: f64 = 1e-12;
const WELL_EXPOSED_SIGMA: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct FusionConfig {
    /// Pyramid depth; `None` picks `floor(log2(min(H, W))) - 2`.
    pub levels: Option<usize>,
    pub wc: f64,
    pub ws: f64,
    pub we: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            levels: None,
            wc: 1.0,
            ws: 1.0,
            we: 1.0,
        }
    }
}

pub fn default_levels(w: usize, h: usize) -> usize {
    max_levels(w, h).saturating_sub(2).max(1)
}

fn check_same_dims(images: &[RgbImage]) -> Result<(usize, usize)> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidStack("nothing to fuse".into()))?;
    for img in images {
        check_dims(first.dims(), img.dims())?;
    }
    Ok(first.dims())
}

/// Normalized weight maps, one per image, summing to one at every pixel.
pub fn mertens_weights(images: &[RgbImage], cfg: &FusionConfig) -> Result<Vec<Plane>> {
    let (w, h) = check_same_dims(images)?;
    let raw: Vec<Plane> = images
        .par_iter()
        .map(|img| {
            let contrast = laplacian(&img.luminance());
            let data = img
                .pixels()
                .iter()
                .zip(contrast.data())
                .map(|(p, &c)| {
                    let mean = (p.r + p.g + p.b) / 3.0;
                    let sat = (((p.r - mean).powi(2) + (p.g - mean).powi(2) + (p.b - mean).powi(2)) / 3.0).sqrt();
                    let well = p
                        .to_array()
                        .iter()
                        .map(|v| (-(v - 0.5).powi(2) / (2.0 * WELL_EXPOSED_SIGMA * WELL_EXPOSED_SIGMA)).exp())
                        .product::<f64>();
                    c.abs().powf(cfg.wc) * sat.powf(cfg.ws) * well.powf(cfg.we) + WEIGHT_FLOOR
                })
                .collect();
            Plane::from_vec(w, h, data)
        })
        .collect();
    let total: Vec<f64> = (0..w * h).map(|i| raw.iter().map(|p| p.data()[i]).sum()).collect();
    Ok(raw
        .into_iter()
        .map(|p| {
            let data = p.data().iter().zip(&total).map(|(v, t)| v / t).collect();
            Plane::from_vec(w, h, data)
        })
        .collect())
}

/// Blends the Laplacian pyramids of the images with the Gaussian pyramids of
/// their weights, collapses, and clips to `[0, 1]`.
pub fn pyramid_fuse(images: &[RgbImage], weights: &[Plane], levels: usize) -> Result<RgbImage> {
    let (w, h) = check_same_dims(images)?;
    if weights.len() != images.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weight maps for {} images",
            weights.len(),
            images.len()
        )));
    }
    for wt in weights {
        check_dims((w, h), wt.dims())?;
    }
    let max = max_levels(w, h);
    if levels == 0 || levels > max {
        return Err(Error::InvalidParameter(format!(
            "pyramid levels must be in 1..={max}, got {levels}"
        )));
    }
    // Per-image contributions are computed in parallel and summed in order.
    let parts: Vec<[Vec<Plane>; 3]> = images
        .par_iter()
        .zip(weights)
        .map(|(img, wt)| {
            let gw = gaussian_pyramid(wt, levels);
            img.channels().map(|ch| {
                laplacian_pyramid(&ch, levels)
                    .iter()
                    .zip(&gw)
                    .map(|(l, g)| l.zip_map(g, |a, b| a * b).expect("same size"))
                    .collect()
            })
        })
        .collect();
    let mut acc = parts[0].clone();
    for part in &parts[1..] {
        for (acc_ch, ch) in acc.iter_mut().zip(part) {
            for (a, b) in acc_ch.iter_mut().zip(ch) {
                a.data_mut().iter_mut().zip(b.data()).for_each(|(x, y)| *x += y);
            }
        }
    }
    let channels = acc.map(|pyr| collapse(&pyr).map(|v| v.clamp(0.0, 1.0)));
    RgbImage::from_channels(&channels, Transfer::Display)
}

/// Weights then pyramid blending.
pub fn fuse(images: &[RgbImage], cfg: &FusionConfig) -> Result<RgbImage> {
    let (w, h) = check_same_dims(images)?;
    let levels = cfg.levels.unwrap_or_else(|| default_levels(w, h));
    let weights = mertens_weights(images, cfg)?;
    pyramid_fuse(images, &weights, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rgb;

    fn textured(w: usize, h: usize, base: Rgb, amp: f64) -> RgbImage {
        RgbImage::from_fn(w, h, Transfer::Display, |x, y| {
            let t = ((x * 31 + y * 17) % 13) as f64 / 13.0 - 0.5;
            (base + Rgb::new(t, -t, 0.5 * t) * amp).clamp01()
        })
    }

    #[test]
    fn one_image_gets_all_weight() {
        let img = textured(16, 16, Rgb::new(0.4, 0.5, 0.6), 0.2);
        let w = mertens_weights(&[img], &FusionConfig::default()).unwrap();
        assert!(w[0].data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn flat_mid_gray_hits_the_floor() {
        let img = RgbImage::from_fn(5, 5, Transfer::Display, |_, _| Rgb::splat(0.5));
        let other = RgbImage::from_fn(5, 5, Transfer::Display, |_, _| Rgb::splat(0.9));
        let w = mertens_weights(&[img, other], &FusionConfig::default()).unwrap();
        // Both raw weights equal the floor, so they split evenly.
        assert!((w[0].get(2, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clipped_white_loses_to_mid_tone() {
        let white = RgbImage::from_fn(9, 9, Transfer::Display, |_, _| Rgb::WHITE);
        let mid = RgbImage::from_fn(9, 9, Transfer::Display, |x, y| {
            let t = if (x + y) % 2 == 0 { 0.1 } else { -0.1 };
            Rgb::new(0.55 + t, 0.45 + t, 0.35 + t)
        });
        let w = mertens_weights(&[white, mid], &FusionConfig::default()).unwrap();
        assert!(w[1].data().iter().all(|&v| v > 0.99));
    }

    #[test]
    fn identical_inputs_are_reproduced() {
        let a = textured(33, 20, Rgb::new(0.3, 0.6, 0.2), 0.4);
        let out = fuse(&[a.clone(), a.clone(), a.clone()], &FusionConfig::default()).unwrap();
        for (p, q) in out.pixels().iter().zip(a.pixels()) {
            assert!((*p - *q).map(f64::abs).max() < 1e-5);
        }
    }

    #[test]
    fn single_level_is_a_weighted_average() {
        let a = textured(8, 8, Rgb::new(0.3, 0.6, 0.2), 0.4);
        let b = textured(8, 8, Rgb::new(0.7, 0.5, 0.4), 0.2);
        let imgs = [a.clone(), b.clone()];
        let w = mertens_weights(&imgs, &FusionConfig::default()).unwrap();
        let out = pyramid_fuse(&imgs, &w, 1).unwrap();
        for i in 0..64 {
            let e = a.pixels()[i] * w[0].data()[i] + b.pixels()[i] * w[1].data()[i];
            assert!((out.pixels()[i] - e).map(f64::abs).max() < 1e-12);
        }
    }

    #[test]
    fn bad_arguments() {
        let a = textured(8, 8, Rgb::new(0.3, 0.6, 0.2), 0.4);
        let b = textured(8, 9, Rgb::new(0.3, 0.6, 0.2), 0.4);
        assert!(fuse(&[], &FusionConfig::default()).is_err());
        assert!(matches!(
            fuse(&[a.clone(), b], &FusionConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let w = mertens_weights(std::slice::from_ref(&a), &FusionConfig::default()).unwrap();
        assert!(pyramid_fuse(std::slice::from_ref(&a), &w, 0).is_err());
        assert!(pyramid_fuse(&[a], &w, 4).is_err());
    }
}
