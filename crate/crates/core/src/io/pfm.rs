//! Portable float map: `PF` (RGB) or `Pf` (gray) header, then raw 32-bit
//! floats, bottom row first. A negative scale means little-endian.

use std::path::Path;

use super::FormatError;
use crate::image::{Rgb, RgbImage, Transfer};

pub fn read_pfm(path: &Path) -> Result<RgbImage, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn write_pfm(img: &RgbImage, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, encode_pfm(img)).map_err(|e| FormatError::io(path, e))
}

/// Little-endian RGB PFM. Values are narrowed to `f32`.
pub fn encode_pfm(img: &RgbImage) -> Vec<u8> {
    let (w, h) = img.dims();
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            let p = img.get(x, y);
            for v in [p.r, p.g, p.b] {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<RgbImage, FormatError> {
    let mut pos = 0;
    let mut token = || -> Result<String, FormatError> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(FormatError::Truncated("pfm header".into()));
        }
        let t = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        Ok(t)
    };
    let channels = match token()?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        _ => return Err(FormatError::BadMagic("PFM")),
    };
    let parse_dim = |t: String| {
        t.parse::<usize>()
            .map_err(|_| FormatError::Header(format!("bad dimension {t:?}")))
    };
    let w = parse_dim(token()?)?;
    let h = parse_dim(token()?)?;
    let scale_tok = token()?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| FormatError::Header(format!("bad scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(FormatError::Header(format!("bad scale {scale}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels * 4))
        .ok_or_else(|| FormatError::Header("dimensions overflow".into()))?;
    let raster = bytes
        .get(pos..)
        .filter(|r| r.len() >= need)
        .ok_or_else(|| FormatError::Truncated(format!("pfm raster: need {need} bytes")))?;
    let little = scale < 0.0;
    let read = |i: usize| {
        let b: [u8; 4] = raster[i * 4..i * 4 + 4].try_into().unwrap();
        if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        }
    };
    let mut img = RgbImage::new(w, h, Transfer::Linear);
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            let base = (row * w + x) * channels;
            let p = if channels == 3 {
                Rgb::new(read(base) as f64, read(base + 1) as f64, read(base + 2) as f64)
            } else {
                Rgb::splat(read(base) as f64)
            };
            img.set(x, y, p);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact_for_f32_values() {
        let img = RgbImage::from_fn(5, 3, Transfer::Linear, |x, y| {
            Rgb::new(
                x as f32 as f64 * 0.1f32 as f64,
                1e-3f32 as f64 * y as f64,
                12345.678f32 as f64,
            )
        });
        let img = img.map(|p| p.map(|v| v as f32 as f64));
        let bytes = encode_pfm(&img);
        let back = decode_pfm(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(encode_pfm(&back), bytes);
    }

    #[test]
    fn big_endian_and_gray_are_read() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_be_bytes());
        bytes.extend_from_slice(&2.0f32.to_be_bytes());
        let img = decode_pfm(&bytes).unwrap();
        assert_eq!(img.get(0, 0), Rgb::splat(0.5));
        assert_eq!(img.get(1, 0), Rgb::splat(2.0));
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(matches!(decode_pfm(b"P6\n1 1\n255\n"), Err(FormatError::BadMagic(_))));
        assert!(matches!(
            decode_pfm(b"PF\n2 2\n-1.0\n\0\0"),
            Err(FormatError::Truncated(_))
        ));
        assert!(matches!(decode_pfm(b"PF\nx 2\n-1.0\n"), Err(FormatError::Header(_))));
        assert!(matches!(decode_pfm(b"PF\n"), Err(FormatError::Truncated(_))));
    }
}
