//! Procedural high-dynamic-range test scenes.
//!
//! A scene is a reflectance map of coloured Voronoi cells with fine texture,
//! lit by a smooth illumination field spanning several stops, plus a few
//! small bright emitters. Everything is derived from the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::image::{Rgb, RgbImage, Transfer};

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    /// Illumination range in stops.
    pub stops: f64,
    pub cells: usize,
    pub emitters: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 256,
            height: 256,
            stops: 10.0,
            cells: 24,
            emitters: 2,
        }
    }
}

fn hsv(h: f64, s: f64, v: f64) -> Rgb {
    let h = h.rem_euclid(1.0) * 6.0;
    let i = h.floor();
    let f = h - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match i as u32 {
        0 => Rgb::new(v, t, p),
        1 => Rgb::new(q, v, p),
        2 => Rgb::new(p, v, t),
        3 => Rgb::new(p, q, v),
        4 => Rgb::new(t, p, v),
        _ => Rgb::new(v, p, q),
    }
}

struct Cell {
    x: f64,
    y: f64,
    color: Rgb,
    freq: (f64, f64),
}

struct Emitter {
    x: f64,
    y: f64,
    r: f64,
    color: Rgb,
}

/// Renders scene number `seed`.
pub fn generate(seed: u64, cfg: &SceneConfig) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (cfg.width, cfg.height);
    let cells: Vec<Cell> = (0..cfg.cells.max(1))
        .map(|_| Cell {
            x: rng.gen::<f64>(),
            y: rng.gen::<f64>(),
            color: hsv(rng.gen(), rng.gen_range(0.25..0.9), rng.gen_range(0.25..0.95)),
            freq: (rng.gen_range(0.05..0.6), rng.gen_range(0.05..0.6)),
        })
        .collect();
    let emitters: Vec<Emitter> = (0..cfg.emitters)
        .map(|_| Emitter {
            x: rng.gen(),
            y: rng.gen(),
            r: rng.gen_range(0.02..0.06),
            color: hsv(rng.gen(), rng.gen_range(0.1..0.5), 1.0) * 2f64.powf(cfg.stops / 2.0 + 2.0),
        })
        .collect();
    // Illumination in stops: a tilted ramp plus two smooth waves.
    let angle = rng.gen::<f64>() * std::f64::consts::TAU;
    let (ca, sa) = (angle.cos(), angle.sin());
    let waves: [(f64, f64, f64, f64); 2] = std::array::from_fn(|_| {
        (
            rng.gen_range(1.0..4.0),
            rng.gen_range(1.0..4.0),
            rng.gen::<f64>() * 6.3,
            rng.gen_range(0.5..1.5),
        )
    });
    let stops = cfg.stops;

    let data: Vec<Rgb> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (px, py) = ((i % w) as f64, (i / w) as f64);
            let (u, v) = (px / w as f64, py / h as f64);
            let mut best = (f64::INFINITY, 0);
            for (k, c) in cells.iter().enumerate() {
                let d = (u - c.x).powi(2) + (v - c.y).powi(2);
                if d < best.0 {
                    best = (d, k);
                }
            }
            let c = &cells[best.1];
            let texture = 1.0 + 0.25 * (px * c.freq.0).sin() * (py * c.freq.1).cos();
            let ramp = (u - 0.5) * ca + (v - 0.5) * sa;
            let wave: f64 = waves
                .iter()
                .map(|&(fx, fy, ph, amp)| amp * (fx * u * 3.0 + ph).sin() * (fy * v * 3.0).cos())
                .sum();
            let illum = (stops * ramp + wave).exp2();
            let mut p = c.color * (texture * illum);
            for e in &emitters {
                let d = ((u - e.x).powi(2) + (v - e.y).powi(2)).sqrt();
                if d < e.r {
                    let falloff = 1.0 - (d / e.r).powi(2);
                    p = p + e.color * falloff;
                }
            }
            p.map(|x| x.max(0.0))
        })
        .collect();
    RgbImage::from_pixels(w, h, Transfer::Linear, data)
}

/// Scenes `0..n` at the given size.
pub fn corpus(n: usize, cfg: &SceneConfig) -> Vec<RgbImage> {
    (0..n as u64).map(|s| generate(s, cfg)).collect()
}
