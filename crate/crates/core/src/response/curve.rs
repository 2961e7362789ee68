use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::io::FormatError;

pub const LUT_SIZE: usize = 256;

/// Display value used in place of 0 when taking logarithms.
pub const ZERO_FLOOR: f64 = 1.0 / 512.0;

/// Estimate of the inverse camera response, per channel.
///
/// `Lut` stores `g(z) = ln f^-1(z)` at `z = k / 255`. `Polynomial` stores the
/// coefficients of `f^-1(z) = sum c_n z^n` (lowest order first), normalized so
/// `f^-1(1) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum ResponseCurve {
    Lut([Vec<f64>; 3]),
    Polynomial([Vec<f64>; 3]),
}

impl ResponseCurve {
    /// Ground-truth LUT of a pure power-law camera, `f^-1(z) = z^gamma`.
    pub fn gamma(gamma: f64) -> Self {
        let table: Vec<f64> = (0..LUT_SIZE)
            .map(|k| gamma * (k as f64 / 255.0).max(ZERO_FLOOR).ln())
            .collect();
        ResponseCurve::Lut([table.clone(), table.clone(), table])
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ResponseCurve::Lut(_) => "lut",
            ResponseCurve::Polynomial(_) => "polynomial",
        }
    }

    /// `g(z) = ln f^-1(z)` for a display value `z` in `[0, 1]`.
    pub fn log_inverse(&self, channel: usize, z: f64) -> f64 {
        match self {
            ResponseCurve::Lut(t) => lut_interp(&t[channel], z),
            ResponseCurve::Polynomial(c) => poly_log(&c[channel], z),
        }
    }

    /// `f^-1(z)` normalized so that `f^-1(1) = 1`.
    pub fn inverse(&self, channel: usize, z: f64) -> f64 {
        match self {
            ResponseCurve::Lut(t) => (lut_interp(&t[channel], z) - t[channel][LUT_SIZE - 1]).exp(),
            ResponseCurve::Polynomial(c) => poly_eval(&c[channel], z.clamp(0.0, 1.0)),
        }
    }

    /// `g` sampled at the 256 display levels.
    pub fn log_table(&self, channel: usize) -> Vec<f64> {
        match self {
            ResponseCurve::Lut(t) => t[channel].clone(),
            ResponseCurve::Polynomial(c) => (0..LUT_SIZE).map(|k| poly_log(&c[channel], k as f64 / 255.0)).collect(),
        }
    }

    pub fn is_monotone(&self) -> bool {
        (0..3).all(|ch| {
            let t: Vec<f64> = (0..LUT_SIZE).map(|k| self.inverse(ch, k as f64 / 255.0)).collect();
            t.windows(2).all(|w| w[1] >= w[0])
        })
    }

    /// Text form. LUTs are 256 lines of `z g_r g_g g_b` (`z` the 8-bit level);
    /// polynomials are a `polynomial <degree>` line followed by one line of
    /// coefficients per channel. Reals use 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            ResponseCurve::Lut(t) => {
                for (k, ((r, g), b)) in t[0].iter().zip(&t[1]).zip(&t[2]).enumerate() {
                    writeln!(s, "{k} {r:.16e} {g:.16e} {b:.16e}").unwrap();
                }
            }
            ResponseCurve::Polynomial(c) => {
                writeln!(s, "polynomial {}", c[0].len() - 1).unwrap();
                for (name, coeffs) in ["r", "g", "b"].iter().zip(c) {
                    s.push_str(name);
                    for v in coeffs {
                        write!(s, " {v:.16e}").unwrap();
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Format(FormatError::Curve(msg));
        let parse = |tok: &str| tok.parse::<f64>().map_err(|e| bad(format!("bad number {tok:?}: {e}")));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines.next().ok_or_else(|| bad("empty curve file".into()))?;
        if let Some(rest) = first.trim().strip_prefix("polynomial") {
            let degree: usize = rest
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad degree in {first:?}")))?;
            let mut chans: [Vec<f64>; 3] = Default::default();
            for (ch, name) in ["r", "g", "b"].iter().enumerate() {
                let line = lines
                    .next()
                    .ok_or_else(|| bad(format!("missing {name} coefficients")))?;
                let mut toks = line.split_whitespace();
                if toks.next() != Some(*name) {
                    return Err(bad(format!("expected channel {name}, got {line:?}")));
                }
                chans[ch] = toks.map(parse).collect::<Result<_>>()?;
                if chans[ch].len() != degree + 1 {
                    return Err(bad(format!(
                        "channel {name}: {} coefficients for degree {degree}",
                        chans[ch].len()
                    )));
                }
            }
            return Ok(ResponseCurve::Polynomial(chans));
        }
        let mut t: [Vec<f64>; 3] = Default::default();
        for (k, line) in std::iter::once(first).chain(lines).enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(bad(format!("line {}: expected 4 fields", k + 1)));
            }
            if toks[0].parse::<usize>().ok() != Some(k) {
                return Err(bad(format!("line {}: expected level {k}", k + 1)));
            }
            for ch in 0..3 {
                t[ch].push(parse(toks[ch + 1])?);
            }
        }
        if t[0].len() != LUT_SIZE {
            return Err(bad(format!("expected {LUT_SIZE} lines, got {}", t[0].len())));
        }
        Ok(ResponseCurve::Lut(t))
    }
}

/// Per-channel MSE between the estimated `f^-1` and `z^gamma`, over 256
/// uniform display values, both normalized to `f^-1(1) = 1`.
pub fn crf_mse(curve: &ResponseCurve, gamma: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (ch, o) in out.iter_mut().enumerate() {
        let se = (0..LUT_SIZE).map(|k| {
            let z = k as f64 / 255.0;
            let d = curve.inverse(ch, z) - z.powf(gamma);
            d * d
        });
        *o = crate::stats::sum(se) / LUT_SIZE as f64;
    }
    out
}

fn lut_interp(t: &[f64], z: f64) -> f64 {
    let x = z.clamp(0.0, 1.0) * 255.0;
    let i = (x.floor() as usize).min(LUT_SIZE - 2);
    let f = x - i as f64;
    if f == 0.0 {
        t[i]
    } else {
        t[i] + (t[i + 1] - t[i]) * f
    }
}

pub(crate) fn poly_eval(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * z + v)
}

fn poly_log(c: &[f64], z: f64) -> f64 {
    // f^-1 can dip to or below zero near black; floor it far below any
    // realistic exposure so the logarithm stays finite.
    poly_eval(c, z.clamp(ZERO_FLOOR, 1.0)).max(1e-9).ln()
}

/// Pool-adjacent-violators: least-squares non-decreasing fit.
pub(crate) fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}
