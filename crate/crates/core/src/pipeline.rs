//! End-to-end fusion: luminance adjustment, Mertens fusion, response
//! estimation, radiance merge and hue correction.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fusion::{fuse, FusionConfig};
use crate::hue::{correct_hue_image_gamma, key_scale};
use crate::image::{RgbImage, Transfer};
use crate::response::{
    estimate_crf_debevec, estimate_crf_mitsunaga, merge_hdr, DebevecConfig, MitsunagaConfig, RadianceMap,
    ResponseCurve, WeightFn,
};
use crate::ssla::{ssla, SslaConfig};
use crate::stack::ExposureStack;

/// The methods compared by the evaluation harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Mertens fusion of the raw stack.
    Mertens,
    /// Global photographic tone curve on the merged radiance map.
    TmGlobal,
    /// Luminance adjustment followed by Mertens fusion.
    SslaOnly,
    /// Luminance adjustment, fusion and hue correction.
    Proposed,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mertens, Method::TmGlobal, Method::SslaOnly, Method::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mertens => "mertens",
            Method::TmGlobal => "tm-global",
            Method::SslaOnly => "ssla-only",
            Method::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CrfMethod {
    #[default]
    Mitsunaga,
    Debevec,
}

impl CrfMethod {
    pub fn name(self) -> &'static str {
        match self {
            CrfMethod::Mitsunaga => "mitsunaga",
            CrfMethod::Debevec => "debevec",
        }
    }
}

impl FromStr for CrfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mitsunaga" => Ok(CrfMethod::Mitsunaga),
            "debevec" => Ok(CrfMethod::Debevec),
            _ => Err(Error::InvalidParameter(format!("unknown response estimator {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub ssla: SslaConfig,
    pub fusion: FusionConfig,
    pub crf: CrfMethod,
    pub mitsunaga: MitsunagaConfig,
    pub debevec: DebevecConfig,
    pub weight: WeightFn,
    /// Skip the luminance adjustment (plain Mertens fusion).
    pub no_ssla: bool,
    /// Display gamma undone before hue correction and reapplied after.
    pub correction_gamma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ssla: SslaConfig::default(),
            fusion: FusionConfig::default(),
            crf: CrfMethod::default(),
            mitsunaga: MitsunagaConfig::default(),
            debevec: DebevecConfig::default(),
            weight: WeightFn::default(),
            no_ssla: false,
            correction_gamma: 2.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub fused: RgbImage,
    pub corrected: RgbImage,
    pub hdr: RadianceMap,
    pub curve: ResponseCurve,
}

pub fn estimate_curve(stack: &ExposureStack, cfg: &PipelineConfig) -> Result<ResponseCurve> {
    match cfg.crf {
        CrfMethod::Mitsunaga => estimate_crf_mitsunaga(stack, &cfg.mitsunaga),
        CrfMethod::Debevec => estimate_crf_debevec(stack, &cfg.debevec),
    }
}

/// Estimates the response and merges the stack into a radiance map.
pub fn reconstruct_hdr(stack: &ExposureStack, cfg: &PipelineConfig) -> Result<(ResponseCurve, RadianceMap)> {
    let curve = estimate_curve(stack, cfg)?;
    let mut hdr = merge_hdr(stack, &curve, cfg.weight);
    hdr.estimator = match cfg.crf {
        CrfMethod::Mitsunaga => crate::response::Estimator::Mitsunaga,
        CrfMethod::Debevec => crate::response::Estimator::Debevec,
    };
    Ok((curve, hdr))
}

/// Fuses the stack, with or without luminance adjustment first.
pub fn fuse_stack(stack: &ExposureStack, cfg: &PipelineConfig) -> Result<RgbImage> {
    if cfg.no_ssla {
        fuse(stack.images(), &cfg.fusion)
    } else {
        let adjusted = ssla(stack, &cfg.ssla)?;
        fuse(&adjusted.images, &cfg.fusion)
    }
}

/// Runs the whole scheme and keeps every intermediate product.
pub fn run_pipeline(stack: &ExposureStack, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let fused = fuse_stack(stack, cfg)?;
    let (curve, hdr) = reconstruct_hdr(stack, cfg)?;
    let corrected = correct_hue_image_gamma(&fused, &hdr.image, cfg.correction_gamma)?;
    Ok(PipelineOutput {
        fused,
        corrected,
        hdr,
        curve,
    })
}

/// Global tone mapping of a radiance map: scale luminance to the key value,
/// apply `f(t) = t/(1+t) (1 + t/l^2)` with `l` the brightest scaled
/// luminance, rescale the colour channels by the luminance ratio, clip and
/// gamma-encode.
pub fn tone_map_global(hdr: &RgbImage, key: f64, gamma: f64) -> Result<RgbImage> {
    let lum = hdr.luminance();
    let k = key_scale(lum.data(), key)?;
    let l = lum.max() * k;
    let inv_l2 = 1.0 / (l * l);
    let inv_gamma = 1.0 / gamma;
    let data = hdr
        .pixels()
        .par_iter()
        .zip(lum.data())
        .map(|(&p, &y)| {
            let t = y * k;
            if t <= 0.0 {
                return p.map(|_| 0.0);
            }
            let mapped = t / (1.0 + t) * (1.0 + t * inv_l2);
            (p * (k * mapped / t)).clamp01().map(|c| c.powf(inv_gamma))
        })
        .collect();
    Ok(RgbImage::from_pixels(
        hdr.width(),
        hdr.height(),
        Transfer::Display,
        data,
    ))
}

/// The output of one method on one stack.
pub fn run_method(stack: &ExposureStack, method: Method, cfg: &PipelineConfig) -> Result<RgbImage> {
    match method {
        Method::Mertens => fuse(stack.images(), &cfg.fusion),
        Method::SslaOnly => fuse_stack(
            stack,
            &PipelineConfig {
                no_ssla: false,
                ..cfg.clone()
            },
        ),
        Method::TmGlobal => {
            let (_, hdr) = reconstruct_hdr(stack, cfg)?;
            tone_map_global(&hdr.image, cfg.ssla.key_value, 2.2)
        }
        Method::Proposed => Ok(run_pipeline(
            stack,
            &PipelineConfig {
                no_ssla: false,
                ..cfg.clone()
            },
        )?
        .corrected),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rgb;
    use crate::synth::{generate_stack, SynthConfig};

    fn scene() -> RgbImage {
        RgbImage::from_fn(48, 40, Transfer::Linear, |x, y| {
            let v = 2f64.powf(x as f64 / 4.0 - 5.0);
            Rgb::new(v * (0.4 + y as f64 / 80.0), v * 0.5, v * (0.9 - y as f64 / 60.0))
        })
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("fattal".parse::<Method>().is_err());
        assert_eq!("debevec".parse::<CrfMethod>().unwrap(), CrfMethod::Debevec);
    }

    #[test]
    fn pipeline_outputs_share_dimensions() {
        let stack = generate_stack(&scene(), &SynthConfig::default()).unwrap();
        let out = run_pipeline(&stack, &PipelineConfig::default()).unwrap();
        assert_eq!(out.fused.dims(), (48, 40));
        assert_eq!(out.corrected.dims(), (48, 40));
        assert_eq!(out.hdr.image.dims(), (48, 40));
        assert!(out.corrected.pixels().iter().all(|p| p.min() >= 0.0 && p.max() <= 1.0));
    }

    #[test]
    fn no_ssla_is_plain_mertens() {
        let stack = generate_stack(&scene(), &SynthConfig::default()).unwrap();
        let cfg = PipelineConfig {
            no_ssla: true,
            ..Default::default()
        };
        assert_eq!(
            fuse_stack(&stack, &cfg).unwrap(),
            run_method(&stack, Method::Mertens, &cfg).unwrap()
        );
    }

    #[test]
    fn global_tone_map_keeps_white_below_one() {
        let out = tone_map_global(&scene(), 0.18, 2.2).unwrap();
        let max = out.pixels().iter().map(|p| p.luminance()).fold(0.0, f64::max);
        assert!(max <= 1.0 + 1e-12);
        assert!(max > 0.5);
    }
}
