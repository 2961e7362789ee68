//! Separable filtering on [`Plane`]s with symmetric (mirror) boundary extension.

use rayon::prelude::*;

use crate::image::Plane;

/// Maps an arbitrary index onto `0..n` by whole-sample symmetric reflection
/// (`.. 1 0 | 0 1 2 .. n-1 | n-1 n-2 ..`). Works for offsets larger than `n`.
pub fn mirror(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

/// Normalized sampled Gaussian with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Convolves rows then columns with the same odd-length symmetric kernel.
pub fn separable(plane: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = plane.dims();
    if w == 0 || h == 0 {
        return plane.clone();
    }
    let r = (kernel.len() / 2) as isize;
    let src = plane.data();
    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        let row = &src[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * row[mirror(x as isize + k as isize - r, w)];
            }
            *d = acc;
        }
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        for (k, &kv) in kernel.iter().enumerate() {
            let sy = mirror(y as isize + k as isize - r, h);
            let src_row = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    });
    Plane::from_vec(w, h, out)
}

pub fn gaussian_blur(plane: &Plane, sigma: f64) -> Plane {
    separable(plane, &gaussian_kernel(sigma))
}

/// 3x3 discrete Laplacian (4-neighbour) with mirror boundaries.
pub fn laplacian(plane: &Plane) -> Plane {
    let (w, h) = plane.dims();
    Plane::from_fn(w, h, |x, y| {
        let at = |dx: isize, dy: isize| plane.get(mirror(x as isize + dx, w), mirror(y as isize + dy, h));
        at(-1, 0) + at(1, 0) + at(0, -1) + at(0, 1) - 4.0 * at(0, 0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_reflects_whole_samples() {
        assert_eq!(mirror(-1, 4), 0);
        assert_eq!(mirror(-2, 4), 1);
        assert_eq!(mirror(4, 4), 3);
        assert_eq!(mirror(5, 4), 2);
        assert_eq!(mirror(9, 4), 1);
        assert_eq!(mirror(0, 1), 0);
        assert_eq!(mirror(-7, 1), 0);
    }

    #[test]
    fn blur_preserves_constants() {
        let p = Plane::filled(7, 5, 0.3);
        let b = gaussian_blur(&p, 4.0);
        assert!(b.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn laplacian_of_linear_ramp_is_zero_inside() {
        let p = Plane::from_fn(6, 6, |x, y| x as f64 + 2.0 * y as f64);
        let l = laplacian(&p);
        assert!(l.get(2, 3).abs() < 1e-12);
    }
}
