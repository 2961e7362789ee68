//! Constant-hue-plane algebra.
//!
//! Any RGB pixel `p` can be written as a convex combination of white
//! `w = (1,1,1)`, black `k = (0,0,0)` and its maximally saturated color `c`:
//!
//! ```text
//! p = a_w * w + a_k * k + a_c * c
//! a_w = min(p),  a_c = max(p) - min(p),  a_k = 1 - max(p)
//! c   = (p - min(p)) / (max(p) - min(p))
//! ```
//!
//! All points sharing `c` lie on one triangle (the constant-hue plane), so
//! swapping `c` for the maximally saturated color of another pixel moves a
//! pixel onto that pixel's hue plane while keeping its white/black/chroma
//! proportions. That swap is the hue correction implemented by
//! [`correct_hue`].

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::image::{Plane, Rgb, RgbImage, Transfer};
use crate::stats;

/// Pixels with `max - min` below this are treated as gray.
pub const ACHROMATIC_THRESHOLD: f64 = 1e-6;

/// Offset added inside the logarithm of [`geometric_mean`].
pub const GEOMETRIC_MEAN_EPS: f64 = 1e-6;

/// Returned when a pixel carries no hue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Achromatic;

/// Barycentric coordinates of a pixel on its constant-hue plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HuePlaneCoords {
    pub a_w: f64,
    pub a_k: f64,
    pub a_c: f64,
    /// Maximally saturated color; `(1,1,1)` when `achromatic`.
    pub c: Rgb,
    pub achromatic: bool,
}

pub fn is_achromatic(p: Rgb) -> bool {
    !(p.max() - p.min() >= ACHROMATIC_THRESHOLD)
}

pub fn max_saturated_color(p: Rgb) -> Result<Rgb, Achromatic> {
    let lo = p.min();
    let span = p.max() - lo;
    if !(span >= ACHROMATIC_THRESHOLD) {
        return Err(Achromatic);
    }
    Ok(p.map(|v| (v - lo) / span))
}

/// Gray pixels get `a_c = 0` and fold their (sub-threshold) chroma into
/// `a_w`, which keeps `a_w + a_k + a_c = 1`.
pub fn decompose(p: Rgb) -> HuePlaneCoords {
    let hi = p.max();
    let lo = p.min();
    match max_saturated_color(p) {
        Ok(c) => HuePlaneCoords {
            a_w: lo,
            a_k: 1.0 - hi,
            a_c: hi - lo,
            c,
            achromatic: false,
        },
        Err(Achromatic) => HuePlaneCoords {
            a_w: hi,
            a_k: 1.0 - hi,
            a_c: 0.0,
            c: Rgb::WHITE,
            achromatic: true,
        },
    }
}

pub fn reconstruct(h: &HuePlaneCoords) -> Rgb {
    // a_k multiplies black, which contributes nothing.
    Rgb::WHITE * h.a_w + h.c * h.a_c
}

/// Moves `fused` onto the constant-hue plane of `reference`.
///
/// `fused` keeps its `a_w`, `a_k`, `a_c`; only its maximally saturated color
/// is replaced. Because the coefficients come from a pixel in `[0,1]^3` and
/// `c(reference)` is itself in `[0,1]^3`, the result stays in gamut. When
/// either pixel is gray there is no hue to move and `fused` is returned
/// unchanged.
pub fn correct_hue(fused: Rgb, reference: Rgb) -> Rgb {
    let Ok(c_ref) = max_saturated_color(reference) else {
        return fused;
    };
    let lo = fused.min();
    let span = fused.max() - lo;
    if !(span >= ACHROMATIC_THRESHOLD) {
        return fused;
    }
    Rgb::new(lo + span * c_ref.r, lo + span * c_ref.g, lo + span * c_ref.b)
}

/// Pixelwise [`correct_hue`]. The result is display-referred.
pub fn correct_hue_image(fused: &RgbImage, hdr: &RgbImage) -> Result<RgbImage> {
    check_dims(fused.dims(), hdr.dims())?;
    let data: Vec<Rgb> = fused
        .pixels()
        .par_iter()
        .zip(hdr.pixels().par_iter())
        .map(|(&f, &r)| correct_hue(f, r))
        .collect();
    Ok(RgbImage::from_pixels(
        fused.width(),
        fused.height(),
        Transfer::Display,
        data,
    ))
}

/// [`correct_hue`] carried out on linear values: `fused` is decoded with
/// `x^gamma`, moved onto the reference's hue plane and encoded again with
/// `x^(1/gamma)`. A gamma of 1 is the plain display-space substitution.
pub fn correct_hue_image_gamma(fused: &RgbImage, hdr: &RgbImage, gamma: f64) -> Result<RgbImage> {
    check_dims(fused.dims(), hdr.dims())?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma {gamma}")));
    }
    let inv = 1.0 / gamma;
    let data: Vec<Rgb> = fused
        .pixels()
        .par_iter()
        .zip(hdr.pixels().par_iter())
        .map(|(&f, &r)| {
            let lin = f.clamp01().map(|c| c.powf(gamma));
            correct_hue(lin, r).map(|c| c.powf(inv))
        })
        .collect();
    Ok(RgbImage::from_pixels(
        fused.width(),
        fused.height(),
        Transfer::Display,
        data,
    ))
}

/// Rec.709 luminance of every pixel.
pub fn luminance(img: &RgbImage) -> Plane {
    img.luminance()
}

/// `exp(mean(ln(L + eps)))` over the pixels selected by `mask` (all pixels
/// when `None`).
pub fn geometric_mean(lum: &Plane, mask: Option<&[bool]>) -> Result<f64> {
    match mask {
        None => log_mean(lum.data().iter().copied()).map(f64::exp),
        Some(mask) => {
            if mask.len() != lum.len() {
                return Err(Error::InvalidParameter(format!(
                    "mask has {} entries for {} pixels",
                    mask.len(),
                    lum.len()
                )));
            }
            let selected = lum.data().iter().zip(mask).filter_map(|(&v, &m)| m.then_some(v));
            log_mean(selected).map(f64::exp)
        }
    }
}

pub(crate) fn log_geo_mean(values: &[f64], log_scale: f64) -> f64 {
    let s = log_scale.exp();
    stats::sum(values.iter().map(|&v| (s * v + GEOMETRIC_MEAN_EPS).ln())) / values.len() as f64
}

/// Solves `g(alpha * values) = key` for `alpha`, where `g` is the
/// epsilon-regularized geometric mean. The plain ratio `key / g(values)` is
/// only exact when epsilon is negligible against every value.
pub fn key_scale(values: &[f64], key: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyMask);
    }
    if !values.iter().any(|&v| v > 0.0) {
        return Err(Error::BlackImage);
    }
    let target = key.ln();
    let h = |s: f64| log_geo_mean(values, s) - target;
    let dh = |s: f64| {
        let e = s.exp();
        stats::sum(values.iter().map(|&v| e * v / (e * v + GEOMETRIC_MEAN_EPS))) / values.len() as f64
    };
    let s0 = target - log_geo_mean(values, 0.0);
    let (mut lo, mut hi) = (s0, s0);
    let mut step = 1.0;
    while h(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    while h(hi) < 0.0 {
        hi += step;
        step *= 2.0;
    }
    let mut s = s0;
    for _ in 0..200 {
        let f = h(s);
        if f.abs() <= 1e-15 {
            break;
        }
        if f < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = dh(s);
        let newton = s - f / d;
        s = if d > 0.0 && newton >= lo && newton <= hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * s.abs().max(1.0) {
            break;
        }
    }
    Ok(s.exp())
}

/// Mean of `ln(v + eps)`; fixed summation order.
pub(crate) fn log_mean(values: impl Iterator<Item = f64>) -> Result<f64> {
    let mut n = 0usize;
    let s = stats::sum(values.map(|v| {
        n += 1;
        (v + GEOMETRIC_MEAN_EPS).ln()
    }));
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(s / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: Rgb, b: Rgb, tol: f64) -> bool {
        (a.r - b.r).abs() <= tol && (a.g - b.g).abs() <= tol && (a.b - b.b).abs() <= tol
    }

    #[test]
    fn max_saturated_color_examples() {
        assert_eq!(
            max_saturated_color(Rgb::new(0.5, 0.25, 0.25)),
            Ok(Rgb::new(1.0, 0.0, 0.0))
        );
        assert_eq!(max_saturated_color(Rgb::splat(0.7)), Err(Achromatic));
        let c = max_saturated_color(Rgb::new(0.2, 0.6, 1.0)).unwrap();
        assert!(close(c, Rgb::new(0.0, 0.5, 1.0), 1e-15));
    }

    #[test]
    fn decompose_examples() {
        let h = decompose(Rgb::new(0.5, 0.25, 0.25));
        assert_eq!((h.a_w, h.a_c, h.a_k), (0.25, 0.25, 0.5));
        assert_eq!(h.c, Rgb::new(1.0, 0.0, 0.0));
        assert!(!h.achromatic);

        let white = decompose(Rgb::WHITE);
        assert_eq!((white.a_w, white.a_c, white.a_k), (1.0, 0.0, 0.0));
        assert!(white.achromatic);

        let black = decompose(Rgb::BLACK);
        assert_eq!((black.a_w, black.a_c, black.a_k), (0.0, 0.0, 1.0));
        assert!(black.achromatic);
    }

    #[test]
    fn reconstruct_examples() {
        let h = HuePlaneCoords {
            a_w: 0.25,
            a_k: 0.5,
            a_c: 0.25,
            c: Rgb::new(1.0, 0.0, 0.0),
            achromatic: false,
        };
        assert_eq!(reconstruct(&h), Rgb::new(0.5, 0.25, 0.25));
        let white = HuePlaneCoords {
            a_w: 1.0,
            a_k: 0.0,
            a_c: 0.0,
            c: Rgb::new(0.3, 0.9, 0.1),
            achromatic: false,
        };
        assert_eq!(reconstruct(&white), Rgb::WHITE);
    }

    #[test]
    fn correct_hue_examples() {
        let out = correct_hue(Rgb::new(0.5, 0.25, 0.25), Rgb::new(2.0, 2.0, 6.0));
        assert_eq!(out, Rgb::new(0.25, 0.25, 0.5));

        let gray = Rgb::splat(0.4);
        assert_eq!(correct_hue(gray, Rgb::new(3.0, 0.1, 0.2)), gray);

        // Same channel ratios: same maximally saturated color.
        let f = Rgb::new(0.6, 0.3, 0.15);
        let out = correct_hue(f, f * 7.0);
        assert!(close(out, f, 1e-15));
    }

    #[test]
    fn correct_hue_passes_through_gray_reference() {
        let f = Rgb::new(0.6, 0.3, 0.15);
        assert_eq!(correct_hue(f, Rgb::splat(5.0)), f);
    }

    #[test]
    fn correct_hue_image_checks_dims() {
        let a = RgbImage::new(2, 2, Transfer::Display);
        let b = RgbImage::new(3, 2, Transfer::Linear);
        assert!(matches!(
            correct_hue_image(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn correct_hue_image_identity_on_matching_hue() {
        let hdr = RgbImage::from_fn(4, 3, Transfer::Linear, |x, y| {
            Rgb::new(0.1 + x as f64 * 0.3, 0.2 + y as f64 * 0.2, 0.05)
        });
        let fused = hdr.clamp01().with_transfer(Transfer::Display);
        let out = correct_hue_image(&fused, &hdr).unwrap();
        for (a, b) in out.pixels().iter().zip(fused.pixels()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn luminance_weights() {
        let img = RgbImage::from_pixels(
            3,
            1,
            Transfer::Display,
            vec![Rgb::WHITE, Rgb::new(1.0, 0.0, 0.0), Rgb::new(0.0, 1.0, 0.0)],
        );
        let l = luminance(&img);
        assert_abs_diff_eq!(l.data()[0], 1.0, epsilon = 1e-15);
        assert_eq!(l.data()[1], 0.2126);
        assert_eq!(l.data()[2], 0.7152);
    }

    #[test]
    fn geometric_mean_examples() {
        let p = Plane::filled(5, 4, 0.3);
        assert_abs_diff_eq!(geometric_mean(&p, None).unwrap(), 0.3, epsilon = 2e-6);

        let p = Plane::from_vec(2, 1, vec![1.0, 4.0]);
        assert_abs_diff_eq!(geometric_mean(&p, None).unwrap(), 2.0, epsilon = 1e-5);

        let p = Plane::from_vec(3, 1, vec![0.2, 0.5, 0.9]);
        let s = 3.5;
        let g1 = geometric_mean(&p, None).unwrap();
        let g2 = geometric_mean(&p.map(|v| v * s), None).unwrap();
        assert_abs_diff_eq!(g2, s * g1, epsilon = 1e-5);
    }

    #[test]
    fn geometric_mean_masked_and_empty() {
        let p = Plane::from_vec(3, 1, vec![1.0, 100.0, 4.0]);
        let g = geometric_mean(&p, Some(&[true, false, true])).unwrap();
        assert_abs_diff_eq!(g, 2.0, epsilon = 1e-5);
        assert!(matches!(
            geometric_mean(&p, Some(&[false, false, false])),
            Err(Error::EmptyMask)
        ));
    }

    fn pixel() -> impl Strategy<Value = Rgb> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(r, g, b)| Rgb::new(r, g, b))
    }

    proptest! {
        #[test]
        fn round_trip(p in pixel()) {
            let back = reconstruct(&decompose(p));
            prop_assert!(is_achromatic(p) || close(back, p, 1e-7));
        }

        #[test]
        fn coefficients_in_simplex(p in pixel()) {
            let h = decompose(p);
            for a in [h.a_w, h.a_k, h.a_c] {
                prop_assert!((0.0..=1.0).contains(&a));
            }
            prop_assert!((h.a_w + h.a_k + h.a_c - 1.0).abs() <= 2.0 * f64::EPSILON);
        }

        #[test]
        fn max_saturated_color_keeps_channel_order(p in pixel()) {
            if let Ok(c) = max_saturated_color(p) {
                prop_assert!((c.min()).abs() < 1e-12 && (c.max() - 1.0).abs() < 1e-12);
                let a = p.to_array();
                let ca = c.to_array();
                for i in 0..3 {
                    for j in 0..3 {
                        if a[i] > a[j] {
                            prop_assert!(ca[i] >= ca[j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn corrected_pixel_takes_reference_hue(
            f in pixel(),
            (r, g, b) in (0.0..50.0f64, 0.0..50.0f64, 0.0..50.0f64),
        ) {
            let reference = Rgb::new(r, g, b);
            let out = correct_hue(f, reference);
            prop_assert!(out.min() >= 0.0 && out.max() <= 1.0);
            prop_assert!((out.max() - f.max()).abs() < 1e-12);
            prop_assert!((out.min() - f.min()).abs() < 1e-12);
            if let (Ok(c_ref), false) = (max_saturated_color(reference), is_achromatic(f)) {
                let c_out = max_saturated_color(out).unwrap();
                prop_assert!(close(c_out, c_ref, 1e-6));
                let (hf, ho) = (decompose(f), decompose(out));
                prop_assert!((hf.a_w - ho.a_w).abs() < 1e-7);
                prop_assert!((hf.a_k - ho.a_k).abs() < 1e-7);
                prop_assert!((hf.a_c - ho.a_c).abs() < 1e-7);
            }
        }
    }
}
