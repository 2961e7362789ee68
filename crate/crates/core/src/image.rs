//! In-memory image containers.
//!
//! Everything is stored as `f64` in row-major order. An [`RgbImage`] carries a
//! [`Transfer`] tag saying whether its values are display-referred (bounded to
//! `[0, 1]`) or linear radiance (unbounded, non-negative).

use std::ops::{Add, Mul, Sub};

use crate::error::{check_dims, Result};

/// One RGB sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub const WHITE: Rgb = Rgb::new(1.0, 1.0, 1.0);
    pub const BLACK: Rgb = Rgb::new(0.0, 0.0, 0.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb { r, g, b }
    }

    pub const fn splat(v: f64) -> Self {
        Rgb { r: v, g: v, b: v }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Rgb::new(a[0], a[1], a[2])
    }

    pub fn max(self) -> f64 {
        self.r.max(self.g).max(self.b)
    }

    pub fn min(self) -> f64 {
        self.r.min(self.g).min(self.b)
    }

    pub fn map(self, mut f: impl FnMut(f64) -> f64) -> Self {
        Rgb::new(f(self.r), f(self.g), f(self.b))
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.g.is_finite() && self.b.is_finite()
    }

    pub fn clamp01(self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Rec.709 luma weights applied to the stored values.
    pub fn luminance(self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        Rgb::new(self.r + o.r, self.g + o.g, self.b + o.b)
    }
}

impl Sub for Rgb {
    type Output = Rgb;
    fn sub(self, o: Rgb) -> Rgb {
        Rgb::new(self.r - o.r, self.g - o.g, self.b - o.b)
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, s: f64) -> Rgb {
        Rgb::new(self.r * s, self.g * s, self.b * s)
    }
}

/// How the values of an [`RgbImage`] relate to scene light.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transfer {
    /// Display-referred, gamma-encoded values in `[0, 1]`.
    Display,
    /// Linear radiance, `>= 0`, unbounded.
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    transfer: Transfer,
    data: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, transfer: Transfer) -> Self {
        RgbImage {
            width,
            height,
            transfer,
            data: vec![Rgb::BLACK; width * height],
        }
    }

    /// # Panics
    ///
    /// If `data.len() != width * height`.
    pub fn from_pixels(width: usize, height: usize, transfer: Transfer, data: Vec<Rgb>) -> Self {
        assert_eq!(data.len(), width * height, "pixel buffer size mismatch");
        RgbImage {
            width,
            height,
            transfer,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, transfer: Transfer, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        RgbImage::from_pixels(width, height, transfer, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn transfer(&self) -> Transfer {
        self.transfer
    }

    pub fn with_transfer(mut self, transfer: Transfer) -> Self {
        self.transfer = transfer;
        self
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.data
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, p: Rgb) {
        self.data[y * self.width + x] = p;
    }

    pub fn map(&self, f: impl Fn(Rgb) -> Rgb) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            transfer: self.transfer,
            data: self.data.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn luminance(&self) -> Plane {
        Plane::from_vec(
            self.width,
            self.height,
            self.data.iter().map(|p| p.luminance()).collect(),
        )
    }

    /// Splits into three single-channel planes.
    pub fn channels(&self) -> [Plane; 3] {
        let plane = |f: fn(&Rgb) -> f64| Plane::from_vec(self.width, self.height, self.data.iter().map(f).collect());
        [plane(|p| p.r), plane(|p| p.g), plane(|p| p.b)]
    }

    pub fn from_channels(channels: &[Plane; 3], transfer: Transfer) -> Result<Self> {
        let dims = channels[0].dims();
        check_dims(dims, channels[1].dims())?;
        check_dims(dims, channels[2].dims())?;
        let data = (0..channels[0].len())
            .map(|i| Rgb::new(channels[0].data()[i], channels[1].data()[i], channels[2].data()[i]))
            .collect();
        Ok(RgbImage::from_pixels(dims.0, dims.1, transfer, data))
    }

    pub fn clamp01(&self) -> RgbImage {
        self.map(Rgb::clamp01)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|p| p.is_finite())
    }
}

/// A single-channel `f64` image (luminance, weights, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Plane::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// # Panics
    ///
    /// If `data.len() != width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane buffer size mismatch");
        Plane { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane::from_vec(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        check_dims(self.dims(), other.dims())?;
        Ok(Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.data)
    }
}
