use crate::error::{Error, Result};
use crate::image::{RgbImage, Transfer};

/// Differently exposed display-referred images of one static scene, each with
/// its relative integration time.
#[derive(Clone, Debug)]
pub struct ExposureStack {
    images: Vec<RgbImage>,
    times: Vec<f64>,
}

impl ExposureStack {
    pub fn new(images: Vec<RgbImage>, times: Vec<f64>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidStack("no images".into()));
        }
        if images.len() != times.len() {
            return Err(Error::InvalidStack(format!(
                "{} images but {} exposure times",
                images.len(),
                times.len()
            )));
        }
        let dims = images[0].dims();
        for (i, img) in images.iter().enumerate() {
            if img.dims() != dims {
                return Err(Error::InvalidStack(format!(
                    "image {i} is {:?}, expected {:?}",
                    img.dims(),
                    dims
                )));
            }
            if img.transfer() != Transfer::Display {
                return Err(Error::InvalidStack(format!("image {i} is not display-referred")));
            }
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidStack(format!("exposure time {t} is not positive")));
        }
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::InvalidStack("empty images".into()));
        }
        Ok(ExposureStack { images, times })
    }

    /// Builds a stack from exposure values, with `dt = 2^ev`.
    pub fn from_ev(images: Vec<RgbImage>, ev: &[f64]) -> Result<Self> {
        ExposureStack::new(images, ev.iter().map(|v| v.exp2()).collect())
    }

    pub fn images(&self) -> &[RgbImage] {
        &self.images
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.images[0].dims()
    }

    /// Indices ordered by increasing exposure time (stable).
    pub fn order_by_time(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.times[a].total_cmp(&self.times[b]));
        idx
    }

    /// Index of the exposure whose time is the median of the stack.
    pub fn middle_index(&self) -> usize {
        self.order_by_time()[self.len() / 2]
    }

    pub(crate) fn require_multi(&self, what: &str) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::InvalidStack(format!(
                "{what} needs at least two exposures, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}
