//! Fusing two exposures of a smooth ramp whose well-exposed regions meet
//! in the middle of the frame.

use huefuse::fusion::{default_levels, fuse, mertens_weights, pyramid_fuse, FusionConfig};
use huefuse::image::{Rgb, RgbImage, Transfer};

const W: usize = 128;
const H: usize = 64;

/// Log-linear ramp over four decades, constant down each column.
fn radiance(x: usize, _y: usize) -> Rgb {
    let v = 10f64.powf(-3.0 + 4.0 * x as f64 / (W - 1) as f64);
    Rgb::new(v, v * 0.8, v * 0.6)
}

fn exposure(gain: f64) -> RgbImage {
    RgbImage::from_fn(W, H, Transfer::Display, |x, y| {
        (radiance(x, y) * gain).clamp01().map(|c| c.powf(1.0 / 2.2))
    })
}

/// Largest jump between horizontal neighbours in the luminance.
fn max_step(img: &RgbImage) -> f64 {
    let l = img.luminance();
    let mut worst = 0.0f64;
    for y in 0..H {
        for x in 1..W {
            worst = worst.max((l.get(x, y) - l.get(x - 1, y)).abs());
        }
    }
    worst
}

#[test]
fn pyramid_blending_softens_the_seam() {
    // Each exposure clips the half the other one renders well.
    let images = [exposure(30.0), exposure(0.3)];
    let cfg = FusionConfig::default();
    let weights = mertens_weights(&images, &cfg).unwrap();
    let naive = pyramid_fuse(&images, &weights, 1).unwrap();
    let fused = pyramid_fuse(&images, &weights, default_levels(W, H)).unwrap();
    assert_eq!(fused, fuse(&images, &cfg).unwrap());

    for p in fused.pixels() {
        assert!(p.min() >= 0.0 && p.max() <= 1.0, "{p:?}");
    }
    let (n, f) = (max_step(&naive), max_step(&fused));
    assert!(f < 0.25 * n, "pyramid step {f} against naive step {n}");
}
