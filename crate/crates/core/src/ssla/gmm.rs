//! One-dimensional Gaussian mixture fitted by EM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stats;

pub const MAX_ITER: usize = 100;
pub const TOLERANCE: f64 = 1e-6;
const VAR_FLOOR: f64 = 1e-6;
const RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Gmm {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl Gmm {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Writes the posterior of every component for `x` into `out`.
    pub fn posteriors(&self, x: f64, out: &mut [f64]) {
        let mut top = f64::NEG_INFINITY;
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.log_joint(k, x);
            top = top.max(*o);
        }
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - top).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    fn log_joint(&self, k: usize, x: f64) -> f64 {
        let v = self.variances[k];
        let d = x - self.means[k];
        self.weights[k].ln() - 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v)
    }

    /// Keeps only the listed components, renormalizing the weights.
    pub fn retain(&self, keep: &[usize]) -> Gmm {
        let w: f64 = keep.iter().map(|&k| self.weights[k]).sum();
        Gmm {
            weights: keep.iter().map(|&k| self.weights[k] / w).collect(),
            means: keep.iter().map(|&k| self.means[k]).collect(),
            variances: keep.iter().map(|&k| self.variances[k]).collect(),
            log_likelihood: self.log_likelihood,
            iterations: self.iterations,
        }
    }
}

/// Fits `k` components to `data` and returns them sorted by mean.
/// Seeding is k-means++ from a ChaCha stream keyed by `seed`. A run whose
/// likelihood stops being finite is reseeded up to three times.
pub fn fit(data: &[f64], k: usize, seed: u64) -> Result<Gmm> {
    if k == 0 {
        return Err(Error::InvalidParameter("mixture needs at least one component".into()));
    }
    if data.is_empty() {
        return Err(Error::Segmentation("no samples".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Segmentation("non-finite sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..=RETRIES {
        let means = seed_means(data, k, &mut rng, attempt);
        if let Some(mut g) = run_em(data, means) {
            let mut order: Vec<usize> = (0..g.len()).collect();
            order.sort_by(|&a, &b| g.means[a].total_cmp(&g.means[b]));
            let ll = g.log_likelihood;
            let it = g.iterations;
            g = g.retain(&order);
            g.log_likelihood = ll;
            g.iterations = it;
            return Ok(g);
        }
    }
    Err(Error::Segmentation(format!(
        "EM did not converge to a finite likelihood after {RETRIES} retries"
    )))
}

fn seed_means(data: &[f64], k: usize, rng: &mut ChaCha8Rng, attempt: usize) -> Vec<f64> {
    let mut means = vec![data[rng.gen_range(0..data.len())]];
    let mut d2: Vec<f64> = data.iter().map(|&x| (x - means[0]).powi(2)).collect();
    while means.len() < k {
        let total = stats::sum(d2.iter().copied());
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            data[pick]
        } else {
            means[0]
        };
        means.push(next);
        for (d, &x) in d2.iter_mut().zip(data) {
            *d = d.min((x - next).powi(2));
        }
    }
    if attempt > 0 {
        let spread = stats::mean(&d2).sqrt().max(1e-3);
        for m in &mut means {
            *m += spread * (rng.gen::<f64>() - 0.5);
        }
    }
    means
}

fn run_em(data: &[f64], means: Vec<f64>) -> Option<Gmm> {
    let k = means.len();
    let n = data.len() as f64;
    let mu = stats::mean(data);
    let var = (stats::sum(data.iter().map(|x| (x - mu).powi(2))) / n).max(VAR_FLOOR);
    let mut g = Gmm {
        weights: vec![1.0 / k as f64; k],
        means,
        variances: vec![var; k],
        log_likelihood: f64::NEG_INFINITY,
        iterations: 0,
    };
    let mut resp = vec![0.0; k];
    let mut logj = vec![0.0; k];
    for it in 1..=MAX_ITER {
        let mut nk = vec![0.0; k];
        let mut sx = vec![0.0; k];
        let mut sxx = vec![0.0; k];
        let mut ll = 0.0;
        for &x in data {
            let mut top = f64::NEG_INFINITY;
            for (j, l) in logj.iter_mut().enumerate() {
                *l = g.log_joint(j, x);
                top = top.max(*l);
            }
            let mut total = 0.0;
            for (r, l) in resp.iter_mut().zip(&logj) {
                *r = (l - top).exp();
                total += *r;
            }
            ll += top + total.ln();
            for j in 0..k {
                let r = resp[j] / total;
                nk[j] += r;
                sx[j] += r * x;
                sxx[j] += r * x * x;
            }
        }
        if !ll.is_finite() {
            return None;
        }
        for j in 0..k {
            if nk[j] > 0.0 {
                let m = sx[j] / nk[j];
                g.means[j] = m;
                g.variances[j] = (sxx[j] / nk[j] - m * m).max(VAR_FLOOR);
            }
            // Tiny floor keeps ln(weight) finite for starved components.
            g.weights[j] = (nk[j] / n).max(1e-300);
        }
        let prev = g.log_likelihood;
        g.log_likelihood = ll;
        g.iterations = it;
        if (ll - prev).abs() <= TOLERANCE * ll.abs().max(1.0) {
            break;
        }
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_clusters_are_found() {
        let mut data: Vec<f64> = (0..500).map(|i| -2.0 + (i % 10) as f64 * 0.01).collect();
        data.extend((0..500).map(|i| 3.0 + (i % 7) as f64 * 0.01));
        let g = fit(&data, 2, 1).unwrap();
        assert!((g.means[0] + 1.955).abs() < 0.01, "{:?}", g.means);
        assert!((g.means[1] - 3.03).abs() < 0.01);
        assert!((g.weights[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_fit() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 100.0).collect();
        assert_eq!(fit(&data, 3, 9).unwrap(), fit(&data, 3, 9).unwrap());
    }

    #[test]
    fn constant_data_does_not_fail() {
        let g = fit(&[0.5; 100], 2, 0).unwrap();
        assert!(g.means.iter().all(|m| (m - 0.5).abs() < 1e-9));
    }

    #[test]
    fn posteriors_sum_to_one() {
        let data: Vec<f64> = (0..200).map(|i| (i as f64 / 20.0).sin()).collect();
        let g = fit(&data, 3, 4).unwrap();
        let mut p = vec![0.0; 3];
        g.posteriors(0.3, &mut p);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(fit(&[], 2, 0).is_err());
        assert!(fit(&[1.0], 0, 0).is_err());
        assert!(fit(&[f64::NAN], 1, 0).is_err());
    }
}
