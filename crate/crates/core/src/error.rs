use thiserror::Error;

use crate::io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid exposure stack: {0}")]
    InvalidStack(String),

    #[error("response curve estimation failed: {0}")]
    EstimationFailed(String),

    #[error("scene segmentation failed: {0}")]
    Segmentation(String),

    #[error("geometric mean over an empty pixel set")]
    EmptyMask,

    #[error("image has zero geometric-mean luminance")]
    BlackImage,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
