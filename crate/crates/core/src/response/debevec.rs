use nalgebra::{DMatrix, DVector};

use super::curve::{isotonic, ResponseCurve, LUT_SIZE};
use super::{all_identical, channel, grid_indices, level, WeightFn};
use crate::error::{Error, Result};
use crate::stack::ExposureStack;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DebevecConfig {
    /// Number of sample pixels.
    pub samples: usize,
    /// Weight of the second-difference smoothness rows.
    pub lambda: f64,
}

impl Default for DebevecConfig {
    fn default() -> Self {
        DebevecConfig {
            samples: 256,
            lambda: 50.0,
        }
    }
}

/// Level pinned to `g = 0`.
const ANCHOR: usize = 128;

/// Solves for `g(z) = ln f^-1(z)` at all 256 levels, per channel, from
/// `w(z) (g(z_ij) - ln E_i) = w(z) ln dt_j` over sampled pixels plus
/// `lambda w(k) g''(k) = 0`, then projects each channel onto non-decreasing
/// curves.
pub fn estimate_crf_debevec(stack: &ExposureStack, cfg: &DebevecConfig) -> Result<ResponseCurve> {
    stack.require_multi("debevec estimation")?;
    if all_identical(stack) {
        return Err(Error::EstimationFailed("all exposures are identical".into()));
    }
    let samples = select_samples(stack, cfg.samples);
    let mut tables: [Vec<f64>; 3] = Default::default();
    for (ch, table) in tables.iter_mut().enumerate() {
        let g = solve_channel(stack, &samples, ch, cfg.lambda)?;
        *table = isotonic(&g);
    }
    Ok(ResponseCurve::Lut(tables))
}

/// Uniform grid over the image, skipping the quarter of grid points with the
/// highest local variance in the middle exposure (edges are where small
/// misalignments and blur corrupt the data terms).
fn select_samples(stack: &ExposureStack, count: usize) -> Vec<usize> {
    let (w, h) = stack.dims();
    let lum = stack.images()[stack.middle_index()].luminance();
    let candidates = grid_indices(w, h, count * 4 / 3 + 1);
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&idx| {
            let (x, y) = ((idx % w) as isize, (idx / w) as isize);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let mut n = 0.0;
            for dy in -2..=2 {
                for dx in -2..=2 {
                    let xx = crate::filter::mirror(x + dx, w);
                    let yy = crate::filter::mirror(y + dy, h);
                    let v = lum.get(xx, yy);
                    s += v;
                    s2 += v * v;
                    n += 1.0;
                }
            }
            ((s2 / n - (s / n).powi(2)).max(0.0), idx)
        })
        .collect();
    // Stable on ties so the choice is reproducible.
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<usize> = scored
        .into_iter()
        .take(count.min(candidates.len()))
        .map(|(_, idx)| idx)
        .collect();
    kept.sort_unstable();
    kept
}

fn solve_channel(stack: &ExposureStack, samples: &[usize], ch: usize, lambda: f64) -> Result<Vec<f64>> {
    let weight = WeightFn::Hat;
    let ln_t: Vec<f64> = stack.times().iter().map(|t| t.ln()).collect();

    // Keep samples that carry at least one non-zero-weight observation.
    let mut obs: Vec<Vec<usize>> = Vec::new();
    for &idx in samples {
        let z: Vec<usize> = stack
            .images()
            .iter()
            .map(|img| level(channel(img.pixels()[idx], ch)))
            .collect();
        if z.iter().any(|&k| weight.eval(k as f64 / 255.0) > 0.0) {
            obs.push(z);
        }
    }
    if obs.is_empty() {
        return Err(Error::EstimationFailed(format!(
            "channel {ch}: every sample is clipped in every exposure"
        )));
    }

    let n = LUT_SIZE + obs.len();
    let mut ata = DMatrix::<f64>::zeros(n, n);
    let mut atb = DVector::<f64>::zeros(n);
    let mut add_row = |entries: &[(usize, f64)], rhs: f64| {
        for &(i, vi) in entries {
            atb[i] += vi * rhs;
            for &(j, vj) in entries {
                ata[(i, j)] += vi * vj;
            }
        }
    };

    for (s, z) in obs.iter().enumerate() {
        for (j, &k) in z.iter().enumerate() {
            let w = weight.eval(k as f64 / 255.0);
            if w > 0.0 {
                add_row(&[(k, w), (LUT_SIZE + s, -w)], w * ln_t[j]);
            }
        }
    }
    add_row(&[(ANCHOR, 1.0)], 0.0);
    for k in 1..LUT_SIZE - 1 {
        let w = lambda * weight.eval(k as f64 / 255.0);
        add_row(&[(k - 1, w), (k, -2.0 * w), (k + 1, w)], 0.0);
    }

    let chol = nalgebra::linalg::Cholesky::new(ata)
        .ok_or_else(|| Error::EstimationFailed(format!("channel {ch}: singular system")))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if !(lo > hi * 1e-7) {
        return Err(Error::EstimationFailed(format!("channel {ch}: ill-conditioned system")));
    }
    let x = chol.solve(&atb);
    let g: Vec<f64> = x.iter().take(LUT_SIZE).copied().collect();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::EstimationFailed(format!("channel {ch}: non-finite solution")));
    }
    Ok(g)
}
