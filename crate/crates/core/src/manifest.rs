//! `stack.json`: the list of exposures in a stack and their exposure values.
//!
//! ```json
//! { "files": ["ev-4.png", "ev+0.png", "ev+4.png"], "ev": [-4, 0, 4], "gamma": 2.2 }
//! ```
//!
//! File paths are relative to the manifest. `gamma` is optional and only
//! informative (it records how the stack was encoded).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_image, FormatError};
use crate::stack::ExposureStack;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    pub files: Vec<PathBuf>,
    pub ev: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl StackManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: StackManifest =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("stack manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<()> {
        if self.files.is_empty() {
            return Err(Error::InvalidStack("manifest lists no files".into()));
        }
        if self.files.len() != self.ev.len() {
            return Err(Error::InvalidStack(format!(
                "manifest lists {} files but {} exposure values",
                self.files.len(),
                self.ev.len()
            )));
        }
        if self.ev.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStack("non-finite exposure value".into()));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        StackManifest::parse(&text)
    }

    /// Loads every listed image, resolving paths against `base`.
    pub fn load(&self, base: &Path) -> Result<ExposureStack> {
        self.validate()?;
        let images = self
            .files
            .iter()
            .map(|f| read_image(&base.join(f)).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        ExposureStack::from_ev(images, &self.ev)
    }
}

/// Reads a manifest and the stack it describes.
pub fn load_stack(path: &Path) -> Result<(StackManifest, ExposureStack)> {
    let m = StackManifest::read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let stack = m.load(base)?;
    Ok((m, stack))
}
