use rayon::prelude::*;

use super::curve::{ResponseCurve, LUT_SIZE};
use super::{channel, Estimator, WeightFn};
use crate::image::{Rgb, RgbImage, Transfer};
use crate::stack::ExposureStack;

/// Linear radiance recovered from an exposure stack.
#[derive(Clone, Debug)]
pub struct RadianceMap {
    pub image: RgbImage,
    pub estimator: Estimator,
    pub weight: WeightFn,
}

impl RadianceMap {
    pub fn from_image(image: RgbImage) -> Self {
        RadianceMap {
            image: image.with_transfer(Transfer::Linear),
            estimator: Estimator::Given,
            weight: WeightFn::Hat,
        }
    }
}

/// Weighted log-domain merge: per pixel and channel,
/// `ln E = sum_i w(z_i) (g(z_i) - ln dt_i) / sum_i w(z_i)`.
///
/// Where every weight is zero (clipped in all exposures) the exposure whose
/// value is closest to 0.5 is used alone.
pub fn merge_hdr(stack: &ExposureStack, curve: &ResponseCurve, weight: WeightFn) -> RadianceMap {
    merge_with_estimator(stack, curve, weight, Estimator::Given)
}

pub(crate) fn merge_with_estimator(
    stack: &ExposureStack,
    curve: &ResponseCurve,
    weight: WeightFn,
    estimator: Estimator,
) -> RadianceMap {
    let ln_t: Vec<f64> = stack.times().iter().map(|t| t.ln()).collect();
    let tables: [Vec<f64>; 3] = [0, 1, 2].map(|ch| curve.log_table(ch));
    let g = |ch: usize, z: f64| -> f64 {
        let x = z * 255.0;
        let k = x.round();
        // Exact 8-bit levels hit the table directly.
        if (x - k).abs() < 1e-9 && (0.0..LUT_SIZE as f64).contains(&k) {
            tables[ch][k as usize]
        } else {
            curve.log_inverse(ch, z)
        }
    };
    let images = stack.images();
    let (w, h) = stack.dims();
    let data: Vec<Rgb> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let mut out = [0.0; 3];
            for (ch, o) in out.iter_mut().enumerate() {
                let mut num = 0.0;
                let mut den = 0.0;
                for (img, lt) in images.iter().zip(&ln_t) {
                    let z = channel(img.pixels()[idx], ch);
                    let wt = weight.eval(z);
                    if wt > 0.0 {
                        num += wt * (g(ch, z) - lt);
                        den += wt;
                    }
                }
                let ln_e = if den > 0.0 {
                    num / den
                } else {
                    let (best, _) = images
                        .iter()
                        .enumerate()
                        .map(|(i, img)| (i, (channel(img.pixels()[idx], ch) - 0.5).abs()))
                        .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
                    g(ch, channel(images[best].pixels()[idx], ch)) - ln_t[best]
                };
                *o = ln_e.exp();
            }
            Rgb::from_array(out)
        })
        .collect();
    RadianceMap {
        image: RgbImage::from_pixels(w, h, Transfer::Linear, data),
        estimator,
        weight,
    }
}
