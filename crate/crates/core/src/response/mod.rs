//! Inverse camera response estimation and HDR radiance merging.
//!
//! Two estimators are provided: a regularized least-squares lookup table
//! ([`estimate_crf_debevec`]) and a polynomial fitted to exposure-ratio
//! constraints ([`estimate_crf_mitsunaga`]). Either result can be handed to
//! [`merge_hdr`] together with the stack to recover linear radiance.

mod curve;
mod debevec;
mod merge;
mod mitsunaga;

pub use curve::{crf_mse, ResponseCurve, LUT_SIZE, ZERO_FLOOR};
pub use debevec::{estimate_crf_debevec, DebevecConfig};
pub use merge::{merge_hdr, RadianceMap};
pub use mitsunaga::{estimate_crf_mitsunaga, DegreeChoice, MitsunagaConfig};

use crate::stack::ExposureStack;

/// Per-sample confidence used by the estimators and by the merge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightFn {
    /// Triangle peaking at mid-gray, zero at 0 and 1.
    #[default]
    Hat,
    /// Every sample weighs 1.
    Uniform,
}

impl WeightFn {
    pub fn eval(self, z: f64) -> f64 {
        match self {
            WeightFn::Hat => {
                if z <= 0.5 {
                    z.max(0.0)
                } else {
                    (1.0 - z).max(0.0)
                }
            }
            WeightFn::Uniform => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightFn::Hat => "hat",
            WeightFn::Uniform => "uniform",
        }
    }
}

/// Which estimator produced a curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Debevec,
    Mitsunaga,
    /// The curve was supplied, not estimated.
    Given,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Debevec => "debevec",
            Estimator::Mitsunaga => "mitsunaga",
            Estimator::Given => "given",
        }
    }
}

/// 8-bit level of a display value.
pub(crate) fn level(z: f64) -> usize {
    (z.clamp(0.0, 1.0) * 255.0).round() as usize
}

/// Pixel indices on a uniform `nx x ny` grid with about `count` points,
/// centred in their cells.
pub(crate) fn grid_indices(width: usize, height: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, width * height);
    let aspect = width as f64 / height as f64;
    let nx = ((count as f64 * aspect).sqrt().round() as usize).clamp(1, width);
    let ny = count.div_ceil(nx).clamp(1, height);
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = ((j as f64 + 0.5) * height as f64 / ny as f64) as usize;
        for i in 0..nx {
            let x = ((i as f64 + 0.5) * width as f64 / nx as f64) as usize;
            out.push(y.min(height - 1) * width + x.min(width - 1));
        }
    }
    out
}

pub(crate) fn channel(p: crate::image::Rgb, ch: usize) -> f64 {
    match ch {
        0 => p.r,
        1 => p.g,
        _ => p.b,
    }
}

pub(crate) fn all_identical(stack: &ExposureStack) -> bool {
    let first = &stack.images()[0];
    stack.images()[1..].iter().all(|img| img.pixels() == first.pixels())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_weight() {
        assert_eq!(WeightFn::Hat.eval(0.0), 0.0);
        assert_eq!(WeightFn::Hat.eval(1.0), 0.0);
        assert_eq!(WeightFn::Hat.eval(0.5), 0.5);
        assert_eq!(WeightFn::Hat.eval(0.25), 0.25);
        assert_eq!(WeightFn::Hat.eval(0.75), 0.25);
        assert_eq!(WeightFn::Uniform.eval(1.0), 1.0);
    }

    #[test]
    fn grid_covers_image() {
        let g = grid_indices(100, 50, 200);
        assert!(g.len() >= 200);
        assert!(g.iter().all(|&i| i < 5000));
        let mut u = g.clone();
        u.dedup();
        assert_eq!(u.len(), g.len());
        assert_eq!(grid_indices(3, 3, 1000).len(), 9);
    }
}
