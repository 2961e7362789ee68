//! Tone-mapped image quality index (Yeganeh and Wang, 2013).
//!
//! `Q = a S^alpha + (1 - a) N^beta`, where `S` is a five-scale structural
//! fidelity between the HDR and LDR luminance and `N` scores the LDR
//! luminance against natural-image brightness and contrast priors.

use rayon::prelude::*;
use statrs::distribution::{Beta, Continuous, ContinuousCDF, Normal};

use crate::error::{check_dims, Result};
use crate::filter::gaussian_kernel;
use crate::image::{Plane, RgbImage};
use crate::stats;

#[derive(Clone, Debug, PartialEq)]
pub struct TmqiParams {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub level_weights: Vec<f64>,
    pub window: usize,
    pub window_sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub brightness_mean: f64,
    pub brightness_std: f64,
    pub contrast_beta: (f64, f64),
    pub contrast_scale: f64,
    pub block: usize,
}

impl Default for TmqiParams {
    fn default() -> Self {
        TmqiParams {
            a: 0.8012,
            alpha: 0.3046,
            beta: 0.7088,
            level_weights: vec![0.0448, 0.2856, 0.3001, 0.2363, 0.1333],
            window: 11,
            window_sigma: 1.5,
            c1: 0.01,
            c2: 10.0,
            brightness_mean: 115.94,
            brightness_std: 27.99,
            contrast_beta: (4.4, 10.1),
            contrast_scale: 64.29,
            block: 11,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Tmqi {
    pub q: f64,
    pub s: f64,
    pub n: f64,
}

/// Scores `ldr` (display values) against the linear radiance `hdr`.
pub fn tmqi(ldr: &RgbImage, hdr: &RgbImage) -> Result<Tmqi> {
    tmqi_with(ldr, hdr, &TmqiParams::default())
}

pub fn tmqi_with(ldr: &RgbImage, hdr: &RgbImage, p: &TmqiParams) -> Result<Tmqi> {
    check_dims(hdr.dims(), ldr.dims())?;
    let l_hdr = hdr_luminance(hdr);
    let l_ldr = ldr.luminance().map(|v| 255.0 * v.clamp(0.0, 1.0));
    let s = structural_fidelity(&l_hdr, &l_ldr, p);
    let n = naturalness(&l_ldr, p);
    let q = p.a * s.powf(p.alpha) + (1.0 - p.a) * n.powf(p.beta);
    Ok(Tmqi { q, s, n })
}

/// HDR luminance stretched onto `[0, 2^32 - 1]`.
fn hdr_luminance(hdr: &RgbImage) -> Plane {
    let y = hdr.luminance().map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 });
    let (lo, hi) = (y.min(), y.max());
    if hi <= lo {
        return Plane::new(y.width(), y.height());
    }
    let scale = ((u32::MAX as f64) / (hi - lo)).round();
    y.map(|v| scale * (v - lo))
}

/// Separable filtering keeping only fully overlapped positions.
fn filter_valid(p: &Plane, k: &[f64]) -> Plane {
    let (w, h) = p.dims();
    let n = k.len();
    let (vw, vh) = (w + 1 - n, h + 1 - n);
    let src = p.data();
    let mut rows = vec![0.0; vw * h];
    rows.par_chunks_mut(vw).enumerate().for_each(|(y, dst)| {
        let row = &src[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    });
    let mut out = vec![0.0; vw * vh];
    out.par_chunks_mut(vw).enumerate().for_each(|(y, dst)| {
        for (j, kv) in k.iter().enumerate() {
            for (d, s) in dst.iter_mut().zip(&rows[(y + j) * vw..(y + j + 1) * vw]) {
                *d += kv * s;
            }
        }
    });
    Plane::from_vec(vw, vh, out)
}

fn csf(f: f64) -> f64 {
    100.0 * 2.6 * (0.0192 + 0.114 * f) * (-(0.114 * f).powf(1.1)).exp()
}

/// Mean of the local structural map at one scale; `f` is the spatial
/// frequency used for the contrast sensitivity threshold.
fn local_structure(hdr: &Plane, ldr: &Plane, f: f64, p: &TmqiParams) -> f64 {
    let k = window_kernel(p);
    let mu1 = filter_valid(hdr, &k);
    let mu2 = filter_valid(ldr, &k);
    let e11 = filter_valid(&hdr.map(|v| v * v), &k);
    let e22 = filter_valid(&ldr.map(|v| v * v), &k);
    let e12 = filter_valid(&hdr.zip_map(ldr, |a, b| a * b).expect("same size"), &k);
    let u = 128.0 / (1.4 * csf(f));
    let norm = Normal::new(u, u / 3.0).expect("positive sigma");
    let (w, h) = mu1.dims();
    let row_sums: Vec<f64> = (0..h)
        .into_par_iter()
        .map(|y| {
            stats::sum((0..w).map(|x| {
                let i = y * w + x;
                let (m1, m2) = (mu1.data()[i], mu2.data()[i]);
                let s1 = (e11.data()[i] - m1 * m1).max(0.0).sqrt();
                let s2 = (e22.data()[i] - m2 * m2).max(0.0).sqrt();
                let s12 = e12.data()[i] - m1 * m2;
                let p1 = norm.cdf(s1);
                let p2 = norm.cdf(s2);
                (2.0 * p1 * p2 + p.c1) / (p1 * p1 + p2 * p2 + p.c1) * ((s12 + p.c2) / (s1 * s2 + p.c2))
            }))
        })
        .collect();
    stats::sum(row_sums) / (w * h) as f64
}

fn window_kernel(p: &TmqiParams) -> Vec<f64> {
    let full = gaussian_kernel(p.window_sigma);
    let r = full.len() / 2;
    let half = p.window / 2;
    let k: Vec<f64> = full[r.saturating_sub(half)..=(r + half).min(full.len() - 1)].to_vec();
    let s: f64 = k.iter().sum();
    k.iter().map(|v| v / s).collect()
}

/// 2x2 box average over valid positions, then every other sample.
fn downsample(p: &Plane) -> Plane {
    let (w, h) = p.dims();
    let (vw, vh) = (w - 1, h - 1);
    let (ow, oh) = (vw.div_ceil(2), vh.div_ceil(2));
    Plane::from_fn(ow, oh, |x, y| {
        let (sx, sy) = (2 * x, 2 * y);
        (p.get(sx, sy) + p.get(sx + 1, sy) + p.get(sx, sy + 1) + p.get(sx + 1, sy + 1)) / 4.0
    })
}

/// Weighted geometric mean of per-scale scores, each clamped to `[0, 1]`.
/// Scales too small for the window are skipped and the remaining weights
/// renormalized.
pub fn structural_fidelity(hdr: &Plane, ldr: &Plane, p: &TmqiParams) -> f64 {
    let mut h = hdr.clone();
    let mut l = ldr.clone();
    let mut f = 32.0;
    let mut log_s = 0.0;
    let mut wsum = 0.0;
    for (i, &wt) in p.level_weights.iter().enumerate() {
        f /= 2.0;
        if h.width().min(h.height()) < p.window {
            break;
        }
        let s = local_structure(&h, &l, f, p).clamp(0.0, 1.0);
        if s == 0.0 {
            return 0.0;
        }
        log_s += wt * s.ln();
        wsum += wt;
        if i + 1 < p.level_weights.len() && h.width().min(h.height()) >= 2 {
            h = downsample(&h);
            l = downsample(&l);
        }
    }
    if wsum == 0.0 {
        return 0.0;
    }
    (log_s / wsum * p.level_weights.iter().sum::<f64>())
        .exp()
        .clamp(0.0, 1.0)
}

/// Brightness prior times contrast prior, each divided by its peak value.
pub fn naturalness(ldr: &Plane, p: &TmqiParams) -> f64 {
    let (w, h) = ldr.dims();
    let mut weighted = Vec::new();
    for by in (0..h).step_by(p.block) {
        for bx in (0..w).step_by(p.block) {
            let vals: Vec<f64> = (by..(by + p.block).min(h))
                .flat_map(|y| (bx..(bx + p.block).min(w)).map(move |x| (x, y)))
                .map(|(x, y)| ldr.get(x, y))
                .collect();
            let n = vals.len();
            let sd = if n > 1 {
                let m = stats::mean(&vals);
                (stats::sum(vals.iter().map(|v| (v - m).powi(2))) / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            weighted.push(sd * n as f64);
        }
    }
    let sigma = stats::sum(weighted) / (w * h) as f64;
    let mu = ldr.mean();

    let (pa, pb) = p.contrast_beta;
    let beta = Beta::new(pa, pb).expect("positive shape");
    let mode = (pa - 1.0) / (pa + pb - 2.0);
    let x = sigma / p.contrast_scale;
    let pc = if (0.0..=1.0).contains(&x) {
        beta.pdf(x) / beta.pdf(mode)
    } else {
        0.0
    };
    let normal = Normal::new(p.brightness_mean, p.brightness_std).expect("positive sigma");
    let pb_ = normal.pdf(mu) / normal.pdf(p.brightness_mean);
    (pb_ * pc).clamp(0.0, 1.0)
}
