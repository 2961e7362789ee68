//! Scene-segmentation-based luminance adjustment.
//!
//! Turns an exposure stack (possibly badly exposed) into `M` adjusted images,
//! each tuned to render one brightness area of the scene at key value 0.18:
//!
//! 1. local contrast enhancement `L' = L^2 / L_a`,
//! 2. segmentation of the scene by a Gaussian mixture on log-luminance,
//! 3. per-area scaling of the best-suited input to the key value,
//! 4. a per-area tone curve `f(t) = t/(1+t) (1 + t/l^2)`,
//! 5. recolouring the source images with the new luminance.
//!
//! The steps run on linear light: inputs are decoded with `x^gamma` first
//! and the adjusted images are encoded back with `x^(1/gamma)`. Setting
//! `gamma` to 1 runs them on the display values as given.

pub mod gmm;

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::filter::gaussian_blur;
use crate::hue::{key_scale, log_geo_mean, GEOMETRIC_MEAN_EPS};
use crate::image::{Plane, RgbImage, Transfer};
use crate::stack::ExposureStack;

/// Added to the local average in the contrast-enhancement step.
pub const ENHANCE_EPS: f64 = 1e-6;
/// Below this source luminance the recolouring ratio is set to zero.
pub const RATIO_FLOOR: f64 = 1e-6;
/// Pooled samples drawn from each exposure for the mixture fit.
const SAMPLES_PER_PLANE: usize = 16384;

#[derive(Clone, Debug, PartialEq)]
pub struct SslaConfig {
    /// Number of areas; `None` uses the number of exposures.
    pub m: Option<usize>,
    /// Local-average Gaussian sigma as a fraction of the shorter side.
    pub sigma_frac: f64,
    pub seed: u64,
    pub key_value: f64,
    /// Display gamma of the inputs.
    pub gamma: f64,
}

impl Default for SslaConfig {
    fn default() -> Self {
        SslaConfig {
            m: None,
            sigma_frac: 0.02,
            seed: 0,
            key_value: 0.18,
            gamma: 2.2,
        }
    }
}

/// Area index per pixel, `0..count`, ordered from darkest to brightest area.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentLabels {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<usize>,
    pub count: usize,
}

impl SegmentLabels {
    pub fn mask(&self, m: usize) -> Vec<bool> {
        self.labels.iter().map(|&l| l == m).collect()
    }

    pub fn area_size(&self, m: usize) -> usize {
        self.labels.iter().filter(|&&l| l == m).count()
    }
}

/// Scaled luminance planes `L''_m = alpha_m L'_phi(m)`.
#[derive(Clone, Debug)]
pub struct ScaledLuminance {
    pub planes: Vec<Plane>,
    pub alphas: Vec<f64>,
    pub phi: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct AdjustedSet {
    pub images: Vec<RgbImage>,
    pub alphas: Vec<f64>,
    pub phi: Vec<usize>,
    pub labels: SegmentLabels,
}

/// `L'_i = L_i^2 / (L_a + eps)` with `L_a` a Gaussian local average,
/// `sigma = sigma_frac * min(H, W)`.
pub fn enhance_local_contrast(stack: &ExposureStack, sigma_frac: f64) -> Vec<Plane> {
    let (w, h) = stack.dims();
    let sigma = sigma_frac * w.min(h) as f64;
    stack
        .images()
        .iter()
        .map(|img| {
            let lum = img.luminance();
            let avg = gaussian_blur(&lum, sigma);
            let data = lum
                .data()
                .par_iter()
                .zip(avg.data())
                .map(|(&l, &a)| l * l / (a + ENHANCE_EPS))
                .collect();
            Plane::from_vec(w, h, data)
        })
        .collect()
}

fn ln_feature(v: f64) -> f64 {
    (v.max(0.0) + GEOMETRIC_MEAN_EPS).ln()
}

/// Fits an `m`-component mixture to the pooled log-luminance of every plane,
/// then labels each pixel by the component with the largest posterior
/// averaged over the planes. Components that end up owning no pixel are
/// dropped.
pub fn segment_scene(enhanced: &[Plane], m: usize, seed: u64) -> Result<SegmentLabels> {
    let first = enhanced
        .first()
        .ok_or_else(|| Error::Segmentation("no luminance planes".into()))?;
    if m == 0 {
        return Err(Error::InvalidParameter("area count must be at least 1".into()));
    }
    let (w, h) = first.dims();
    for p in enhanced {
        check_dims((w, h), p.dims())?;
    }
    let n = w * h;
    let stride = n.div_ceil(SAMPLES_PER_PLANE).max(1);
    let pooled: Vec<f64> = enhanced
        .iter()
        .flat_map(|p| p.data().iter().step_by(stride).map(|&v| ln_feature(v)))
        .collect();
    let model = gmm::fit(&pooled, m, seed)?;
    let k = model.len();
    let raw: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let mut post = vec![0.0; k];
            let mut acc = vec![0.0; k];
            for p in enhanced {
                model.posteriors(ln_feature(p.data()[idx]), &mut post);
                for (a, q) in acc.iter_mut().zip(&post) {
                    *a += q;
                }
            }
            let mut best = 0;
            for j in 1..k {
                if acc[j] > acc[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let mut used = vec![false; k];
    raw.iter().for_each(|&l| used[l] = true);
    let mut remap = vec![usize::MAX; k];
    let mut count = 0;
    for (j, &u) in used.iter().enumerate() {
        if u {
            remap[j] = count;
            count += 1;
        }
    }
    Ok(SegmentLabels {
        width: w,
        height: h,
        labels: raw.iter().map(|&l| remap[l]).collect(),
        count,
    })
}

/// Area values of `plane`, in pixel order.
fn area_values(plane: &Plane, labels: &SegmentLabels, m: usize) -> Vec<f64> {
    plane
        .data()
        .iter()
        .zip(&labels.labels)
        .filter_map(|(&v, &l)| (l == m).then_some(v))
        .collect()
}

/// For each area `m`, picks the input whose area geometric mean is closest to
/// the key value (ties go to the lower index) and scales its whole plane so
/// that the area's geometric mean becomes the key value.
pub fn scale_luminance(enhanced: &[Plane], labels: &SegmentLabels, key: f64) -> Result<ScaledLuminance> {
    if enhanced.is_empty() {
        return Err(Error::InvalidStack("no luminance planes".into()));
    }
    let mut out = ScaledLuminance {
        planes: Vec::with_capacity(labels.count),
        alphas: Vec::with_capacity(labels.count),
        phi: Vec::with_capacity(labels.count),
    };
    for m in 0..labels.count {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (j, plane) in enhanced.iter().enumerate() {
            check_dims((labels.width, labels.height), plane.dims())?;
            let vals = area_values(plane, labels, m);
            if vals.is_empty() {
                return Err(Error::EmptyMask);
            }
            let dist = (key - log_geo_mean(&vals, 0.0).exp()).powi(2);
            if best.as_ref().is_none_or(|b| dist < b.1) {
                best = Some((j, dist, vals));
            }
        }
        let (j, _, vals) = best.expect("at least one plane");
        let alpha = match key_scale(&vals, key) {
            Ok(a) => a,
            // An area that is black in every exposure has nothing to scale.
            Err(Error::BlackImage) => 1.0,
            Err(e) => return Err(e),
        };
        out.planes.push(enhanced[j].map(|v| alpha * v));
        out.alphas.push(alpha);
        out.phi.push(j);
    }
    Ok(out)
}

/// `f(t) = t/(1+t) (1 + t/l^2)` with `l = max(plane)`; maps `[0, l]` onto
/// `[0, 1]` with `f(l) = 1`.
pub fn tone_map_segment(plane: &Plane) -> Plane {
    let l = plane.max().max(0.0);
    if l == 0.0 {
        return Plane::new(plane.width(), plane.height());
    }
    let inv_l2 = 1.0 / (l * l);
    plane.map(|t| {
        let t = t.max(0.0);
        (t / (1.0 + t) * (1.0 + t * inv_l2)).min(1.0)
    })
}

/// `I_m = (L_m / L_phi(m)) I_phi(m)`, ratio zero where the source luminance is
/// below [`RATIO_FLOOR`], channels clipped to `[0, 1]`.
pub fn recombine(
    tonemapped: &[Plane],
    stack: &ExposureStack,
    phi: &[usize],
    original_lums: &[Plane],
) -> Result<Vec<RgbImage>> {
    if tonemapped.len() != phi.len() {
        return Err(Error::InvalidParameter(format!(
            "{} tone-mapped planes for {} source indices",
            tonemapped.len(),
            phi.len()
        )));
    }
    let dims = stack.dims();
    tonemapped
        .iter()
        .zip(phi)
        .map(|(lm, &j)| {
            let src = stack
                .images()
                .get(j)
                .ok_or_else(|| Error::InvalidParameter(format!("source index {j} out of range")))?;
            let lum = original_lums
                .get(j)
                .ok_or_else(|| Error::InvalidParameter(format!("no luminance for source {j}")))?;
            check_dims(dims, lm.dims())?;
            check_dims(dims, lum.dims())?;
            let data = src
                .pixels()
                .par_iter()
                .zip(lum.data())
                .zip(lm.data())
                .map(|((&p, &l), &target)| {
                    let ratio = if l < RATIO_FLOOR { 0.0 } else { target / l };
                    (p * ratio).clamp01()
                })
                .collect();
            Ok(RgbImage::from_pixels(dims.0, dims.1, Transfer::Display, data))
        })
        .collect()
}

/// Every image raised to `gamma`, channels clipped to `[0, 1]` first.
pub fn decode_stack(stack: &ExposureStack, gamma: f64) -> Result<ExposureStack> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma {gamma}")));
    }
    let images = stack
        .images()
        .iter()
        .map(|i| i.map(|p| p.clamp01().map(|c| c.powf(gamma))))
        .collect();
    ExposureStack::new(images, stack.times().to_vec())
}

/// Runs the five steps in order.
pub fn ssla(stack: &ExposureStack, cfg: &SslaConfig) -> Result<AdjustedSet> {
    if !(cfg.sigma_frac > 0.0 && cfg.sigma_frac.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma_frac {}", cfg.sigma_frac)));
    }
    if !(cfg.key_value > 0.0 && cfg.key_value < 1.0) {
        return Err(Error::InvalidParameter(format!("key value {}", cfg.key_value)));
    }
    let decoded;
    let stack = if cfg.gamma == 1.0 {
        stack
    } else {
        decoded = decode_stack(stack, cfg.gamma)?;
        &decoded
    };
    let m = cfg.m.unwrap_or(stack.len());
    let enhanced = enhance_local_contrast(stack, cfg.sigma_frac);
    let labels = segment_scene(&enhanced, m, cfg.seed)?;
    let scaled = scale_luminance(&enhanced, &labels, cfg.key_value)?;
    let tonemapped: Vec<Plane> = scaled.planes.iter().map(tone_map_segment).collect();
    let lums: Vec<Plane> = stack.images().iter().map(RgbImage::luminance).collect();
    let mut images = recombine(&tonemapped, stack, &scaled.phi, &lums)?;
    if cfg.gamma != 1.0 {
        let inv = 1.0 / cfg.gamma;
        for img in &mut images {
            img.pixels_mut()
                .par_iter_mut()
                .for_each(|p| *p = p.map(|c| c.powf(inv)));
        }
    }
    Ok(AdjustedSet {
        images,
        alphas: scaled.alphas,
        phi: scaled.phi,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hue::{geometric_mean, max_saturated_color};
    use crate::image::Rgb;
    use crate::stats;

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> RgbImage {
        RgbImage::from_fn(w, h, Transfer::Display, |x, y| Rgb::splat(f(x, y)))
    }

    fn single(img: RgbImage) -> ExposureStack {
        ExposureStack::new(vec![img], vec![1.0]).unwrap()
    }

    #[test]
    fn constant_image_is_a_fixed_point_of_enhancement() {
        let s = single(gray(20, 20, |_, _| 0.4));
        let e = enhance_local_contrast(&s, 0.02);
        assert!(e[0].data().iter().all(|&v| (v - 0.4).abs() < 1e-5));
    }

    #[test]
    fn checkerboard_with_wide_average() {
        let s = single(gray(64, 64, |x, y| if (x + y) % 2 == 0 { 0.8 } else { 0.2 }));
        let e = enhance_local_contrast(&s, 0.5);
        let v = e[0].get(32, 32);
        assert!((v - 1.28).abs() < 1e-3, "{v}");
        assert!((e[0].get(33, 32) - 0.08).abs() < 1e-3);
    }

    #[test]
    fn bright_pixel_is_amplified() {
        let s = single(gray(21, 21, |x, y| if x == 10 && y == 10 { 0.9 } else { 0.3 }));
        let e = enhance_local_contrast(&s, 0.1);
        assert!(e[0].get(10, 10) > 0.9);
    }

    #[test]
    fn bimodal_scene_splits_into_halves() {
        let scene = |k: f64| gray(40, 30, move |x, _| (if x < 20 { 0.05 } else { 0.6 }) * k);
        let s = ExposureStack::new(vec![scene(0.5), scene(1.0), scene(1.5)], vec![0.5, 1.0, 1.5]).unwrap();
        let e = enhance_local_contrast(&s, 0.02);
        let labels = segment_scene(&e, 2, 3).unwrap();
        assert_eq!(labels.count, 2);
        let agree = labels
            .labels
            .iter()
            .enumerate()
            .filter(|(i, &l)| l == usize::from(i % 40 >= 20))
            .count();
        assert!(agree as f64 >= 0.99 * labels.labels.len() as f64, "{agree}");
    }

    #[test]
    fn one_area_and_constant_scene() {
        let s = single(gray(16, 16, |x, _| x as f64 / 16.0));
        let e = enhance_local_contrast(&s, 0.02);
        let l = segment_scene(&e, 1, 0).unwrap();
        assert_eq!(l.count, 1);
        assert!(l.labels.iter().all(|&v| v == 0));

        let c = single(gray(16, 16, |_, _| 0.3));
        let e = enhance_local_contrast(&c, 0.02);
        let l = segment_scene(&e, 2, 0).unwrap();
        assert_eq!(l.count, 1);
    }

    #[test]
    fn key_scale_examples() {
        let a = key_scale(&[0.18; 10], 0.18).unwrap();
        assert!((a - 1.0).abs() < 1e-4);
        let vals = [0.09, 0.09, 0.09];
        let a = key_scale(&vals, 0.18).unwrap();
        assert!((a - 2.0).abs() < 1e-4);
        let with_zeros = [0.0, 0.5, 0.01, 0.0, 2.0];
        let a = key_scale(&with_zeros, 0.18).unwrap();
        let g = log_geo_mean(&with_zeros.map(|v| v * a), 0.0).exp();
        assert!((g - 0.18).abs() < 1e-9, "{g}");
        assert!(matches!(key_scale(&[0.0; 3], 0.18), Err(Error::BlackImage)));
    }

    #[test]
    fn phi_picks_closest_geometric_mean() {
        let planes = vec![Plane::filled(4, 4, 0.09), Plane::filled(4, 4, 0.40)];
        let labels = SegmentLabels {
            width: 4,
            height: 4,
            labels: vec![0; 16],
            count: 1,
        };
        let s = scale_luminance(&planes, &labels, 0.18).unwrap();
        assert_eq!(s.phi, vec![0]);
        assert!((s.alphas[0] - 2.0).abs() < 1e-4);
        let g = geometric_mean(&s.planes[0], None).unwrap();
        assert!((g - 0.18).abs() < 1e-9);

        let tie = vec![Plane::filled(2, 2, 0.18), Plane::filled(2, 2, 0.18)];
        let labels = SegmentLabels {
            width: 2,
            height: 2,
            labels: vec![0; 4],
            count: 1,
        };
        let s = scale_luminance(&tie, &labels, 0.18).unwrap();
        assert_eq!(s.phi, vec![0]);
        assert!((s.alphas[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn tone_curve_examples() {
        let p = Plane::from_vec(3, 1, vec![0.0, 0.5, 1.0]);
        let t = tone_map_segment(&p);
        assert_eq!(t.data(), &[0.0, 0.5, 1.0]);
        let p = Plane::from_vec(2, 1, vec![0.3, 7.3]);
        assert!((tone_map_segment(&p).get(1, 0) - 1.0).abs() < 1e-12);
        assert!(tone_map_segment(&Plane::new(3, 3)).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recombine_examples() {
        let img = RgbImage::from_pixels(
            3,
            1,
            Transfer::Display,
            vec![Rgb::new(0.6, 0.3, 0.1), Rgb::splat(0.4), Rgb::BLACK],
        );
        let s = single(img.clone());
        let lum = img.luminance();
        let same = recombine(std::slice::from_ref(&lum), &s, &[0], std::slice::from_ref(&lum)).unwrap();
        for (a, b) in same[0].pixels().iter().zip(img.pixels()) {
            assert!((*a - *b).map(f64::abs).max() < 1e-12);
        }
        let half = lum.map(|v| v * 0.5);
        let out = recombine(&[half], &s, &[0], &[lum]).unwrap();
        let p = out[0].pixels();
        assert_eq!(p[1].r, p[1].g);
        assert_eq!(p[1].g, p[1].b);
        assert_eq!(p[2], Rgb::BLACK);
        let c0 = max_saturated_color(img.pixels()[0]).unwrap();
        let c1 = max_saturated_color(p[0]).unwrap();
        assert!((c0 - c1).map(f64::abs).max() < 1e-12);
    }

    #[test]
    fn single_input_gives_m_images() {
        let s = single(gray(32, 32, |x, _| if x < 16 { 0.1 } else { 0.7 }));
        let cfg = SslaConfig {
            m: Some(2),
            ..Default::default()
        };
        let a = ssla(&s, &cfg).unwrap();
        assert_eq!(a.images.len(), 2);
        assert_eq!(a.phi, vec![0, 0]);
    }

    #[test]
    fn underexposed_stack_is_brightened() {
        let scene = |k: f64| {
            RgbImage::from_fn(48, 48, Transfer::Display, move |x, y| {
                let v = (0.02 + 0.3 * (x as f64 / 48.0) * (y as f64 / 48.0)) * k;
                Rgb::new(v, v * 0.8, v * 0.5).clamp01()
            })
        };
        let s = ExposureStack::from_ev(vec![scene(0.25), scene(0.5), scene(1.0)], &[-4.0, -2.0, 0.0]).unwrap();
        let a = ssla(&s, &SslaConfig::default()).unwrap();
        let mean_in = stats::mean(&s.images().iter().map(|i| i.luminance().mean()).collect::<Vec<_>>());
        for img in &a.images {
            assert!(img.luminance().mean() > mean_in);
        }
        assert!(a.alphas.iter().any(|&x| x > 1.0));
    }

    #[test]
    fn deterministic() {
        let s = single(gray(24, 24, |x, y| ((x * 7 + y * 3) % 11) as f64 / 11.0));
        let a = ssla(&s, &SslaConfig::default()).unwrap();
        let b = ssla(&s, &SslaConfig::default()).unwrap();
        assert_eq!(a.images, b.images);
        assert_eq!(a.labels, b.labels);
    }
}
