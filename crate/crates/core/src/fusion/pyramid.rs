//! Gaussian and Laplacian pyramids with the 5-tap binomial kernel
//! `[1 4 6 4 1] / 16` and symmetric boundaries. Each level halves the size,
//! rounding up, so odd sizes are handled without padding.

use rayon::prelude::*;

use crate::filter::mirror;
use crate::image::Plane;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

fn half(n: usize) -> usize {
    n.div_ceil(2)
}

/// Blurs and keeps every other sample in both directions.
pub fn reduce(p: &Plane) -> Plane {
    let (w, h) = p.dims();
    let (hw, hh) = (half(w), half(h));
    let src = p.data();
    let mut rows = vec![0.0; hw * h];
    rows.par_chunks_mut(hw).enumerate().for_each(|(y, dst)| {
        let row = &src[y * w..(y + 1) * w];
        for (i, d) in dst.iter_mut().enumerate() {
            *d = KERNEL
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * row[mirror(2 * i as isize + k as isize - 2, w)])
                .sum();
        }
    });
    let mut out = vec![0.0; hw * hh];
    out.par_chunks_mut(hw).enumerate().for_each(|(i, dst)| {
        for (k, kv) in KERNEL.iter().enumerate() {
            let sy = mirror(2 * i as isize + k as isize - 2, h);
            for (d, s) in dst.iter_mut().zip(&rows[sy * hw..(sy + 1) * hw]) {
                *d += kv * s;
            }
        }
    });
    Plane::from_vec(hw, hh, out)
}

/// Upsamples one line to `n` samples: even outputs
/// `(a[i-1] + 6 a[i] + a[i+1]) / 8`, odd outputs `(a[i] + a[i+1]) / 2`.
fn expand_line(a: &[f64], n: usize, out: &mut [f64]) {
    let len = a.len();
    let at = |i: isize| a[mirror(i, len)];
    for (j, o) in out.iter_mut().enumerate().take(n) {
        let i = (j / 2) as isize;
        *o = if j % 2 == 0 {
            (at(i - 1) + 6.0 * at(i) + at(i + 1)) / 8.0
        } else {
            (at(i) + at(i + 1)) / 2.0
        };
    }
}

/// Upsamples to exactly `w x h`, the size of the finer level.
pub fn expand(p: &Plane, w: usize, h: usize) -> Plane {
    let (pw, ph) = p.dims();
    let src = p.data();
    let mut rows = vec![0.0; w * ph];
    rows.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        expand_line(&src[y * pw..(y + 1) * pw], w, dst);
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(j, dst)| {
        let i = (j / 2) as isize;
        let row = |k: isize| &rows[mirror(k, ph) * w..(mirror(k, ph) + 1) * w];
        if j % 2 == 0 {
            let (a, b, c) = (row(i - 1), row(i), row(i + 1));
            for x in 0..w {
                dst[x] = (a[x] + 6.0 * b[x] + c[x]) / 8.0;
            }
        } else {
            let (a, b) = (row(i), row(i + 1));
            for x in 0..w {
                dst[x] = (a[x] + b[x]) / 2.0;
            }
        }
    });
    Plane::from_vec(w, h, out)
}

/// `levels` planes, finest first.
pub fn gaussian_pyramid(p: &Plane, levels: usize) -> Vec<Plane> {
    let mut out = vec![p.clone()];
    while out.len() < levels.max(1) {
        let next = reduce(out.last().expect("non-empty"));
        out.push(next);
    }
    out
}

/// Band-pass levels `G_k - expand(G_{k+1})`; the last level is the coarsest
/// Gaussian level itself.
pub fn laplacian_pyramid(p: &Plane, levels: usize) -> Vec<Plane> {
    let g = gaussian_pyramid(p, levels);
    let mut out = Vec::with_capacity(g.len());
    for k in 0..g.len() - 1 {
        let (w, h) = g[k].dims();
        let up = expand(&g[k + 1], w, h);
        out.push(g[k].zip_map(&up, |a, b| a - b).expect("same size"));
    }
    out.push(g.last().expect("non-empty").clone());
    out
}

/// Inverse of [`laplacian_pyramid`].
pub fn collapse(pyr: &[Plane]) -> Plane {
    let mut cur = pyr.last().expect("non-empty pyramid").clone();
    for lvl in pyr[..pyr.len() - 1].iter().rev() {
        let (w, h) = lvl.dims();
        cur = expand(&cur, w, h).zip_map(lvl, |a, b| a + b).expect("same size");
    }
    cur
}

/// Largest usable level count for a `w x h` image.
pub fn max_levels(w: usize, h: usize) -> usize {
    (w.min(h).max(1).ilog2() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise(w: usize, h: usize, seed: u64) -> Plane {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Plane::from_fn(w, h, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
    }

    #[test]
    fn sizes_round_up() {
        let g = gaussian_pyramid(&Plane::new(13, 6), 4);
        let dims: Vec<_> = g.iter().map(Plane::dims).collect();
        assert_eq!(dims, vec![(13, 6), (7, 3), (4, 2), (2, 1)]);
    }

    #[test]
    fn constants_survive_reduce_and_expand() {
        let c = Plane::filled(9, 5, 0.37);
        assert!(reduce(&c).data().iter().all(|v| (v - 0.37).abs() < 1e-15));
        assert!(expand(&reduce(&c), 9, 5)
            .data()
            .iter()
            .all(|v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn max_levels_values() {
        assert_eq!(max_levels(256, 512), 8);
        assert_eq!(max_levels(1, 1), 1);
        assert_eq!(max_levels(3, 100), 1);
    }

    proptest! {
        #[test]
        fn collapse_inverts_laplacian(w in 1usize..40, h in 1usize..40, levels in 1usize..6, seed in any::<u64>()) {
            let p = noise(w, h, seed);
            let back = collapse(&laplacian_pyramid(&p, levels));
            for (a, b) in p.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
