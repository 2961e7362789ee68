#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod filter;
pub mod fusion;
pub mod hue;
pub mod image;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod response;
pub mod scene;
pub mod ssla;
pub mod stack;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/hue-plane.md")]
    pub struct HuePlane;
    #[doc = include_str!("../../../book/src/response.md")]
    pub struct Response;
    #[doc = include_str!("../../../book/src/ssla.md")]
    pub struct Ssla;
    #[doc = include_str!("../../../book/src/fusion.md")]
    pub struct Fusion;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
