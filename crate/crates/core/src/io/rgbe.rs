//! Radiance `.hdr` files: a text header, a resolution line, then RGBE
//! scanlines (flat, old-style run-length, or new-style per-component RLE).

use std::path::Path;

use super::FormatError;
use crate::image::{Rgb, RgbImage, Transfer};

/// Decodes one RGBE quad: `byte * 2^(e - 128 - 8)`, or zero when `e == 0`.
pub fn rgbe_to_float(q: [u8; 4]) -> Rgb {
    if q[3] == 0 {
        return Rgb::BLACK;
    }
    let f = 2f64.powi(q[3] as i32 - 136);
    Rgb::new(q[0] as f64 * f, q[1] as f64 * f, q[2] as f64 * f)
}

/// Shared-exponent encoding: the largest channel keeps 8 significant bits;
/// mantissas are truncated as in the reference implementation.
pub fn float_to_rgbe(p: Rgb) -> [u8; 4] {
    let p = p.map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 });
    let v = p.max();
    if v < 1e-32 {
        return [0, 0, 0, 0];
    }
    let (mant, exp) = frexp(v);
    if exp > 127 {
        return [255, 255, 255, 255];
    }
    let scale = mant * 256.0 / v;
    let byte = |c: f64| (c * scale).floor().min(255.0) as u8;
    [byte(p.r), byte(p.g), byte(p.b), (exp + 128) as u8]
}

/// `v = m * 2^e` with `m` in `[0.5, 1)`, for finite `v > 0`.
fn frexp(v: f64) -> (f64, i32) {
    let mut e = v.log2().floor() as i32 + 1;
    let mut m = v / 2f64.powi(e);
    if m >= 1.0 {
        m /= 2.0;
        e += 1;
    } else if m < 0.5 {
        m *= 2.0;
        e -= 1;
    }
    (m, e)
}

pub fn read_radiance_hdr(path: &Path) -> Result<RgbImage, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    decode_radiance_hdr(&bytes)
}

pub fn write_radiance_hdr(img: &RgbImage, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, encode_radiance_hdr(img)).map_err(|e| FormatError::io(path, e))
}

#[derive(Clone, Copy, Debug)]
struct Axis {
    is_y: bool,
    positive: bool,
    len: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str, FormatError> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| FormatError::Truncated("header".into()))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end])
            .map(|s| s.trim_end_matches('\r'))
            .map_err(|_| FormatError::Header("non-UTF-8 header line".into()))
    }

    fn byte(&mut self, row: usize) -> Result<u8, FormatError> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| FormatError::Truncated(format!("scanline {row} ends early")))?;
        self.pos += 1;
        Ok(b)
    }

    fn quad(&mut self, row: usize) -> Result<[u8; 4], FormatError> {
        Ok([self.byte(row)?, self.byte(row)?, self.byte(row)?, self.byte(row)?])
    }
}

pub fn decode_radiance_hdr(bytes: &[u8]) -> Result<RgbImage, FormatError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.line().map_err(|_| FormatError::BadMagic("Radiance HDR"))?;
    if !(magic.starts_with("#?RADIANCE") || magic.starts_with("#?RGBE")) {
        return Err(FormatError::BadMagic("Radiance HDR"));
    }
    loop {
        let line = cur.line()?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(FormatError::Unsupported(format!("pixel format {fmt}")));
            }
        }
    }
    let res = cur.line()?;
    let (major, minor) = parse_resolution(res)?;
    let (width, height) = if major.is_y {
        (minor.len, major.len)
    } else {
        (major.len, minor.len)
    };

    let mut img = RgbImage::new(width, height, Transfer::Linear);
    let mut line = vec![[0u8; 4]; minor.len];
    for s in 0..major.len {
        read_scanline(&mut cur, &mut line, s)?;
        for (t, q) in line.iter().enumerate() {
            let along = |axis: Axis, i: usize| {
                // -Y runs top to bottom, +X left to right.
                if axis.positive != axis.is_y {
                    i
                } else {
                    axis.len - 1 - i
                }
            };
            let (x, y) = if major.is_y {
                (along(minor, t), along(major, s))
            } else {
                (along(major, s), along(minor, t))
            };
            img.set(x, y, rgbe_to_float(*q));
        }
    }
    Ok(img)
}

fn parse_resolution(line: &str) -> Result<(Axis, Axis), FormatError> {
    let bad = || FormatError::UnsupportedOrientation(line.to_string());
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 4 {
        return Err(bad());
    }
    let axis = |sign_axis: &str, len: &str| -> Result<Axis, FormatError> {
        let positive = match sign_axis.as_bytes().first() {
            Some(b'+') => true,
            Some(b'-') => false,
            _ => return Err(bad()),
        };
        let is_y = match &sign_axis[1..] {
            "Y" => true,
            "X" => false,
            _ => return Err(bad()),
        };
        let len = len
            .parse::<usize>()
            .map_err(|_| FormatError::Header(format!("bad resolution {line:?}")))?;
        Ok(Axis { is_y, positive, len })
    };
    let major = axis(toks[0], toks[1])?;
    let minor = axis(toks[2], toks[3])?;
    if major.is_y == minor.is_y {
        return Err(bad());
    }
    if major.len == 0 || minor.len == 0 {
        return Err(FormatError::Header(format!("empty image {line:?}")));
    }
    Ok((major, minor))
}

fn read_scanline(cur: &mut Cursor, line: &mut [[u8; 4]], row: usize) -> Result<(), FormatError> {
    let width = line.len();
    let first = cur.quad(row)?;
    let is_new_rle = (8..=0x7fff).contains(&width) && first[0] == 2 && first[1] == 2 && first[2] & 0x80 == 0;
    if !is_new_rle {
        return read_old_scanline(cur, line, row, first);
    }
    let declared = ((first[2] as usize) << 8) | first[3] as usize;
    if declared != width {
        return Err(FormatError::Scanline {
            row,
            reason: format!("length {declared} does not match width {width}"),
        });
    }
    for comp in 0..4 {
        let mut i = 0;
        while i < width {
            let count = cur.byte(row)? as usize;
            if count > 128 {
                let run = count - 128;
                if i + run > width {
                    return Err(FormatError::Scanline {
                        row,
                        reason: "run overflows scanline".into(),
                    });
                }
                let v = cur.byte(row)?;
                for px in &mut line[i..i + run] {
                    px[comp] = v;
                }
                i += run;
            } else {
                if count == 0 || i + count > width {
                    return Err(FormatError::Scanline {
                        row,
                        reason: "bad literal length".into(),
                    });
                }
                for px in &mut line[i..i + count] {
                    px[comp] = cur.byte(row)?;
                }
                i += count;
            }
        }
    }
    Ok(())
}

fn read_old_scanline(cur: &mut Cursor, line: &mut [[u8; 4]], row: usize, first: [u8; 4]) -> Result<(), FormatError> {
    let width = line.len();
    let mut i = 0;
    let mut shift = 0u32;
    let mut q = first;
    loop {
        if q[0] == 1 && q[1] == 1 && q[2] == 1 {
            if i == 0 {
                return Err(FormatError::Scanline {
                    row,
                    reason: "repeat marker with no pixel".into(),
                });
            }
            let count = (q[3] as usize) << shift;
            if i + count > width {
                return Err(FormatError::Scanline {
                    row,
                    reason: "repeat overflows scanline".into(),
                });
            }
            let prev = line[i - 1];
            line[i..i + count].fill(prev);
            i += count;
            shift += 8;
        } else {
            line[i] = q;
            i += 1;
            shift = 0;
        }
        if i >= width {
            return Ok(());
        }
        q = cur.quad(row)?;
    }
}

/// Standard `-Y h +X w` orientation, new-style RLE where the width allows.
pub fn encode_radiance_hdr(img: &RgbImage) -> Vec<u8> {
    let (w, h) = img.dims();
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {h} +X {w}\n").into_bytes();
    let mut comp = vec![0u8; w];
    for y in 0..h {
        let quads: Vec<[u8; 4]> = (0..w).map(|x| float_to_rgbe(img.get(x, y))).collect();
        if !(8..=0x7fff).contains(&w) {
            quads.iter().for_each(|q| out.extend_from_slice(q));
            continue;
        }
        out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xff) as u8]);
        for c in 0..4 {
            for (dst, q) in comp.iter_mut().zip(&quads) {
                *dst = q[c];
            }
            rle_encode(&comp, &mut out);
        }
    }
    out
}

const MIN_RUN: usize = 4;

fn rle_encode(data: &[u8], out: &mut Vec<u8>) {
    let n = data.len();
    let mut cur = 0;
    while cur < n {
        let mut beg_run = cur;
        let mut run = 0;
        let mut old_run = 0;
        while run < MIN_RUN && beg_run < n {
            beg_run += run;
            old_run = run;
            run = 1;
            while beg_run + run < n && run < 127 && data[beg_run] == data[beg_run + run] {
                run += 1;
            }
        }
        // A short run right before the long one still beats literals.
        if old_run > 1 && old_run == beg_run - cur {
            out.push(128 + old_run as u8);
            out.push(data[cur]);
            cur = beg_run;
        }
        while cur < beg_run {
            let len = (beg_run - cur).min(128);
            out.push(len as u8);
            out.extend_from_slice(&data[cur..cur + len]);
            cur += len;
        }
        if run >= MIN_RUN {
            out.push(128 + run as u8);
            out.push(data[beg_run]);
            cur += run;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn quad_decoding() {
        assert_eq!(rgbe_to_float([128, 128, 128, 129]), Rgb::splat(1.0));
        assert_eq!(rgbe_to_float([0, 0, 0, 0]), Rgb::BLACK);
        assert_eq!(rgbe_to_float([200, 7, 0, 0]), Rgb::BLACK);
    }

    #[test]
    fn quad_encoding() {
        assert_eq!(float_to_rgbe(Rgb::splat(1.0)), [128, 128, 128, 129]);
        assert_eq!(float_to_rgbe(Rgb::BLACK), [0, 0, 0, 0]);
        assert_eq!(float_to_rgbe(Rgb::new(-1.0, f64::NAN, 0.0)), [0, 0, 0, 0]);
    }

    #[test]
    fn random_map_round_trips_within_one_percent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let img = RgbImage::from_fn(37, 19, Transfer::Linear, |_, _| {
            let e = rng.gen_range(-12.0..12.0f64).exp2();
            Rgb::new(rng.gen::<f64>() * e, rng.gen::<f64>() * e, rng.gen::<f64>() * e)
        });
        let back = decode_radiance_hdr(&encode_radiance_hdr(&img)).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            let err = (*a - *b).map(f64::abs).max();
            assert!(err <= 0.01 * a.max(), "{a:?} -> {b:?}");
        }
    }

    #[test]
    fn narrow_images_use_flat_scanlines() {
        let img = RgbImage::from_fn(3, 2, Transfer::Linear, |x, y| Rgb::splat((x + 2 * y) as f64 + 0.5));
        let bytes = encode_radiance_hdr(&img);
        let back = decode_radiance_hdr(&bytes).unwrap();
        assert_eq!(back, img);
    }

    fn header(res: &str) -> Vec<u8> {
        format!("#?RGBE\nEXPOSURE=1.0\n\n{res}\n").into_bytes()
    }

    #[test]
    fn orientations_are_normalized() {
        // Two rows of two pixels with values 1..4 in file order.
        let px = |v: u8| [v * 32, v * 32, v * 32, 131];
        let body: Vec<u8> = (1..=4).flat_map(px).collect();
        let cases = [
            ("-Y 2 +X 2", [[1, 2], [3, 4]]),
            ("+Y 2 +X 2", [[3, 4], [1, 2]]),
            ("-Y 2 -X 2", [[2, 1], [4, 3]]),
            ("+X 2 -Y 2", [[1, 3], [2, 4]]),
            ("-X 2 +Y 2", [[4, 2], [3, 1]]),
        ];
        for (res, rows) in cases {
            let mut bytes = header(res);
            bytes.extend_from_slice(&body);
            let img = decode_radiance_hdr(&bytes).unwrap();
            for (y, row) in rows.iter().enumerate() {
                for (x, &v) in row.iter().enumerate() {
                    assert_eq!(img.get(x, y).r, v as f64, "{res} at {x},{y}");
                }
            }
        }
    }

    #[test]
    fn old_style_repeat_runs() {
        let mut bytes = header("-Y 1 +X 5");
        bytes.extend_from_slice(&[10, 20, 30, 128]);
        bytes.extend_from_slice(&[1, 1, 1, 3]);
        bytes.extend_from_slice(&[40, 50, 60, 128]);
        let img = decode_radiance_hdr(&bytes).unwrap();
        assert_eq!(img.get(3, 0), img.get(0, 0));
        assert_eq!(img.get(4, 0), rgbe_to_float([40, 50, 60, 128]));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(decode_radiance_hdr(b"P6\n"), Err(FormatError::BadMagic(_))));
        assert!(matches!(decode_radiance_hdr(b""), Err(FormatError::BadMagic(_))));
        assert!(matches!(
            decode_radiance_hdr(&header("+Z 2 +X 2")),
            Err(FormatError::UnsupportedOrientation(_))
        ));
        assert!(matches!(
            decode_radiance_hdr(&header("-Y 2 -Y 2")),
            Err(FormatError::UnsupportedOrientation(_))
        ));
        assert!(matches!(
            decode_radiance_hdr(b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n\0\0\0\0"),
            Err(FormatError::Unsupported(_))
        ));
        // Header promises 2x2, only one pixel follows.
        let mut bytes = header("-Y 2 +X 2");
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        assert!(matches!(decode_radiance_hdr(&bytes), Err(FormatError::Truncated(_))));
        // RLE scanline whose run overflows the width.
        let mut bytes = header("-Y 1 +X 8");
        bytes.extend_from_slice(&[2, 2, 0, 8, 128 + 9, 1]);
        assert!(matches!(decode_radiance_hdr(&bytes), Err(FormatError::Scanline { .. })));
        // Truncated RLE data.
        let img = RgbImage::from_fn(16, 4, Transfer::Linear, |x, _| Rgb::splat(x as f64));
        let full = encode_radiance_hdr(&img);
        assert!(decode_radiance_hdr(&full[..full.len() - 3]).is_err());
    }

    proptest! {
        #[test]
        fn rle_round_trip(data in prop::collection::vec(prop::sample::select(vec![0u8, 1, 7, 200]), 8..600)) {
            let width = data.len();
            let img = RgbImage::from_fn(width, 1, Transfer::Linear, |x, _| {
                rgbe_to_float([data[x], data[(x + 1) % width], 3, 130])
            });
            let bytes = encode_radiance_hdr(&img);
            let back = decode_radiance_hdr(&bytes).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
