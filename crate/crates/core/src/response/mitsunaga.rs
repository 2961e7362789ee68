use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};

use super::curve::{isotonic, poly_eval, ResponseCurve, LUT_SIZE, ZERO_FLOOR};
use super::{all_identical, channel, grid_indices};
use crate::error::{Error, Result};
use crate::stack::ExposureStack;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DegreeChoice {
    Fixed(usize),
    /// Fit every degree in the range and keep the one with the smallest
    /// residual (ties go to the lower degree).
    Auto(RangeInclusive<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MitsunagaConfig {
    pub degree: DegreeChoice,
    /// Number of sample pixels (grid points).
    pub samples: usize,
}

impl Default for MitsunagaConfig {
    fn default() -> Self {
        MitsunagaConfig {
            degree: DegreeChoice::Fixed(5),
            samples: 16384,
        }
    }
}

struct Fit {
    coeffs: Vec<f64>,
    rms: f64,
}

/// Fits `f^-1(z) = sum_{n=0}^{N} c_n z^n` per channel so that, for each
/// sampled pixel seen unclipped in two consecutive exposures `q`, `q+1`,
/// `f^-1(z_q) - R_q f^-1(z_{q+1})` is minimized in the least-squares sense,
/// where `R_q = dt_q / dt_{q+1}`. The constraint `f^-1(1) = 1` is eliminated
/// by substituting `c_N = 1 - sum_{n<N} c_n`. Exposure ratios come straight
/// from the stack's times and are not re-estimated.
///
/// If a fitted polynomial is not monotone on the 256 display levels, the
/// curve is returned as an isotonic lookup table instead.
pub fn estimate_crf_mitsunaga(stack: &ExposureStack, cfg: &MitsunagaConfig) -> Result<ResponseCurve> {
    stack.require_multi("mitsunaga estimation")?;
    let degrees = match &cfg.degree {
        DegreeChoice::Fixed(d) => *d..=*d,
        DegreeChoice::Auto(r) => r.clone(),
    };
    if *degrees.start() < 2 || degrees.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "polynomial degree must be >= 2, got {degrees:?}"
        )));
    }
    if all_identical(stack) {
        return Err(Error::EstimationFailed("all exposures are identical".into()));
    }
    let order = stack.order_by_time();
    if order.windows(2).any(|w| stack.times()[w[0]] == stack.times()[w[1]]) {
        return Err(Error::EstimationFailed("exposure times must be distinct".into()));
    }
    let (w, h) = stack.dims();
    let samples = grid_indices(w, h, cfg.samples);

    let mut chans: [Vec<f64>; 3] = Default::default();
    for (ch, out) in chans.iter_mut().enumerate() {
        let pairs = ratio_pairs(stack, &order, &samples, ch);
        let mut best: Option<Fit> = None;
        for d in degrees.clone() {
            let Some(fit) = fit_degree(&pairs, d) else { continue };
            if best.as_ref().is_none_or(|b| fit.rms < b.rms) {
                best = Some(fit);
            }
        }
        *out = best
            .ok_or_else(|| {
                Error::EstimationFailed(format!(
                    "channel {ch}: not enough unsaturated pixel pairs ({})",
                    pairs.len()
                ))
            })?
            .coeffs;
    }

    let curve = ResponseCurve::Polynomial(chans);
    if curve.is_monotone() {
        return Ok(curve);
    }
    let tables = [0, 1, 2].map(|ch| {
        let ResponseCurve::Polynomial(c) = &curve else {
            unreachable!()
        };
        let raw: Vec<f64> = (0..LUT_SIZE)
            .map(|k| poly_eval(&c[ch], (k as f64 / 255.0).max(ZERO_FLOOR)).max(1e-9).ln())
            .collect();
        isotonic(&raw)
    });
    Ok(ResponseCurve::Lut(tables))
}

/// `(z_q, z_{q+1}, R_q)` for consecutive exposures where both values are
/// strictly inside `(0, 1)`.
fn ratio_pairs(stack: &ExposureStack, order: &[usize], samples: &[usize], ch: usize) -> Vec<(f64, f64, f64)> {
    let mut pairs = Vec::new();
    for &idx in samples {
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            let za = channel(stack.images()[a].pixels()[idx], ch);
            let zb = channel(stack.images()[b].pixels()[idx], ch);
            let usable = |z: f64| z > 0.0 && z < 1.0;
            if usable(za) && usable(zb) {
                pairs.push((za, zb, stack.times()[a] / stack.times()[b]));
            }
        }
    }
    pairs
}

fn fit_degree(pairs: &[(f64, f64, f64)], degree: usize) -> Option<Fit> {
    let unknowns = degree; // c_0 .. c_{N-1}; c_N is eliminated
    if pairs.len() < 2 * (unknowns + 1) {
        return None;
    }
    let mut a = DMatrix::<f64>::zeros(pairs.len(), unknowns);
    let mut rhs = DVector::<f64>::zeros(pairs.len());
    for (row, &(za, zb, r)) in pairs.iter().enumerate() {
        let d = |n: i32| za.powi(n) - r * zb.powi(n);
        let d_top = d(degree as i32);
        for n in 0..unknowns {
            a[(row, n)] = d(n as i32) - d_top;
        }
        rhs[row] = -d_top;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > smax * 1e-12) {
        return None;
    }
    let x = svd.solve(&rhs, smax * 1e-14).ok()?;
    let resid = &a * &x - &rhs;
    let rms = (resid.norm_squared() / pairs.len() as f64).sqrt();
    let mut coeffs: Vec<f64> = x.iter().copied().collect();
    coeffs.push(1.0 - coeffs.iter().sum::<f64>());
    coeffs.iter().all(|c| c.is_finite()).then_some(Fit { coeffs, rms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{Rgb, RgbImage, Transfer};
    use crate::response::{crf_mse, estimate_crf_debevec, DebevecConfig};

    fn ramp_stack(gamma: f64, evs: &[f64]) -> ExposureStack {
        let (w, h) = (160, 90);
        let hdr = RgbImage::from_fn(w, h, Transfer::Linear, |x, y| {
            let e = (x as f64 / w as f64 * 9.0 - 6.0).exp2();
            let tint = [
                Rgb::new(1.0, 0.7, 0.5),
                Rgb::new(0.5, 1.0, 0.7),
                Rgb::new(0.7, 0.5, 1.0),
            ][y * 3 / h];
            tint * e * (1.0 + 0.3 * ((x * 7 + y * 13) % 11) as f64 / 11.0)
        });
        let images = evs
            .iter()
            .map(|&v| {
                hdr.map(|p| p.map(|c| ((c * v.exp2()).clamp(0.0, 1.0).powf(1.0 / gamma) * 255.0).round() / 255.0))
                    .with_transfer(Transfer::Display)
            })
            .collect();
        ExposureStack::from_ev(images, evs).unwrap()
    }

    #[test]
    fn recovers_gamma_and_beats_debevec() {
        let s = ramp_stack(2.2, &[-4.0, -2.0, 0.0, 2.0, 4.0]);
        let m = estimate_crf_mitsunaga(&s, &MitsunagaConfig::default()).unwrap();
        let d = estimate_crf_debevec(&s, &DebevecConfig::default()).unwrap();
        let mm = crf_mse(&m, 2.2);
        let dm = crf_mse(&d, 2.2);
        for ch in 0..3 {
            assert!(mm[ch] < 1e-4, "{mm:?}");
            assert!(mm[ch] < dm[ch], "{mm:?} vs {dm:?}");
        }
    }

    #[test]
    fn auto_degree_picks_from_range() {
        let s = ramp_stack(2.2, &[-2.0, 0.0, 2.0]);
        let cfg = MitsunagaConfig {
            degree: DegreeChoice::Auto(3..=7),
            ..Default::default()
        };
        let c = estimate_crf_mitsunaga(&s, &cfg).unwrap();
        if let ResponseCurve::Polynomial(p) = &c {
            assert!((4..=8).contains(&p[0].len()));
            // f^-1(1) = 1 by construction.
            assert!((poly_eval(&p[1], 1.0) - 1.0).abs() < 1e-12);
        }
        assert!(c.is_monotone());
    }

    #[test]
    fn fully_saturated_stack_fails() {
        let img = RgbImage::from_fn(8, 8, Transfer::Display, |_, _| Rgb::WHITE);
        let mut dark = img.clone();
        dark.set(0, 0, Rgb::splat(0.5));
        let s = ExposureStack::from_ev(vec![img, dark], &[0.0, 2.0]).unwrap();
        assert!(matches!(
            estimate_crf_mitsunaga(&s, &MitsunagaConfig::default()),
            Err(Error::EstimationFailed(_))
        ));
    }

    #[test]
    fn degree_below_two_is_rejected() {
        let s = ramp_stack(2.2, &[0.0, 2.0]);
        let cfg = MitsunagaConfig {
            degree: DegreeChoice::Fixed(1),
            ..Default::default()
        };
        assert!(matches!(
            estimate_crf_mitsunaga(&s, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }
}
