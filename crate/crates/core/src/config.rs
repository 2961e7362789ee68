//! `key = value` configuration files.
//!
//! ```text
//! # comments start with '#'
//! ssla.m = 3
//! fusion.levels = 6
//! crf.method = debevec
//! ```
//!
//! Every key mirrors a command-line flag; flags given on the command line
//! are applied after the file and therefore take precedence.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::FormatError;
use crate::metrics::TmqiParams;
use crate::pipeline::{CrfMethod, PipelineConfig};
use crate::response::{DegreeChoice, WeightFn};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub tmqi: TmqiParams,
}

/// Splits a config file into `(key, value)` pairs in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("config line {}: expected key = value", n + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

impl Settings {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (k, v) in parse_pairs(text)? {
            s.set(&k, &v)?;
        }
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        Settings::from_text(&text)
    }

    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "ssla.m" => p.ssla.m = optional(key, value)?,
            "ssla.sigma_frac" => p.ssla.sigma_frac = num(key, value)?,
            "ssla.seed" => p.ssla.seed = num(key, value)?,
            "ssla.key_value" => p.ssla.key_value = num(key, value)?,
            "ssla.gamma" => p.ssla.gamma = num(key, value)?,
            "ssla.enabled" => p.no_ssla = !num::<bool>(key, value)?,
            "fusion.levels" => p.fusion.levels = optional(key, value)?,
            "fusion.wc" => p.fusion.wc = num(key, value)?,
            "fusion.ws" => p.fusion.ws = num(key, value)?,
            "fusion.we" => p.fusion.we = num(key, value)?,
            "crf.method" => p.crf = value.parse::<CrfMethod>()?,
            "crf.degree" => {
                p.mitsunaga.degree = match optional::<usize>(key, value)? {
                    Some(d) => DegreeChoice::Fixed(d),
                    None => DegreeChoice::Auto(3..=7),
                }
            }
            "crf.samples" => p.mitsunaga.samples = num(key, value)?,
            "crf.lambda" => p.debevec.lambda = num(key, value)?,
            "crf.debevec_samples" => p.debevec.samples = num(key, value)?,
            "merge.weight" => {
                p.weight = match value {
                    "hat" => WeightFn::Hat,
                    "uniform" => WeightFn::Uniform,
                    _ => return Err(Error::InvalidParameter(format!("{key}: unknown weight {value:?}"))),
                }
            }
            "correct.gamma" => p.correction_gamma = num(key, value)?,
            "tmqi.a" => self.tmqi.a = num(key, value)?,
            "tmqi.alpha" => self.tmqi.alpha = num(key, value)?,
            "tmqi.beta" => self.tmqi.beta = num(key, value)?,
            "tmqi.c1" => self.tmqi.c1 = num(key, value)?,
            "tmqi.c2" => self.tmqi.c2 = num(key, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }
}
