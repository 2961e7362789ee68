//! Linear sRGB (D65) to CIE XYZ to CIE L*a*b*.

use crate::image::{Rgb, RgbImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Lab { l, a, b }
    }
}

/// How RGB values are brought to linear light before conversion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Linearize {
    /// Values are already linear.
    Linear,
    /// Display values decoded as `v^gamma`.
    Gamma(f64),
}

const M: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Reference white: the image of RGB white, so `(1, 1, 1)` lands exactly on
/// `L* = 100, a* = b* = 0`.
const WHITE: [f64; 3] = [
    M[0][0] + M[0][1] + M[0][2],
    M[1][0] + M[1][1] + M[1][2],
    M[2][0] + M[2][1] + M[2][2],
];

fn f(t: f64) -> f64 {
    const D: f64 = 6.0 / 29.0;
    if t > D * D * D {
        t.cbrt()
    } else {
        t / (3.0 * D * D) + 4.0 / 29.0
    }
}

/// Converts one pixel; channels are clipped to `[0, 1]` after linearization.
pub fn pixel_to_lab(p: Rgb, lin: Linearize) -> Lab {
    let c = match lin {
        Linearize::Linear => p.clamp01(),
        Linearize::Gamma(g) => p.clamp01().map(|v| v.powf(g)),
    }
    .to_array();
    let xyz: [f64; 3] = [0, 1, 2].map(|i| M[i][0] * c[0] + M[i][1] * c[1] + M[i][2] * c[2]);
    let fx = f(xyz[0] / WHITE[0]);
    let fy = f(xyz[1] / WHITE[1]);
    let fz = f(xyz[2] / WHITE[2]);
    Lab::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

pub fn rgb_to_lab(img: &RgbImage, lin: Linearize) -> Vec<Lab> {
    img.pixels().iter().map(|&p| pixel_to_lab(p, lin)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_black_gray() {
        let w = pixel_to_lab(Rgb::WHITE, Linearize::Gamma(2.2));
        assert!((w.l - 100.0).abs() < 1e-9 && w.a.abs() < 1e-9 && w.b.abs() < 1e-9);
        let k = pixel_to_lab(Rgb::BLACK, Linearize::Gamma(2.2));
        assert!(k.l.abs() < 1e-12);
        let g = pixel_to_lab(Rgb::splat(0.5), Linearize::Linear);
        assert!(g.a.abs() < 1e-9 && g.b.abs() < 1e-9);
        assert!((g.l - 76.0693).abs() < 1e-3);
    }

    #[test]
    fn primaries_have_expected_hue_quadrants() {
        let r = pixel_to_lab(Rgb::new(1.0, 0.0, 0.0), Linearize::Linear);
        assert!(r.a > 70.0 && r.b > 50.0);
        let b = pixel_to_lab(Rgb::new(0.0, 0.0, 1.0), Linearize::Linear);
        assert!(b.b < -100.0);
    }
}
