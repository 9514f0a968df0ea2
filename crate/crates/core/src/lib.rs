//! Core of the RGBW remosaic toolkit: CFA geometry, the MRAW1 container,
//! dataset synthesis, remosaic baselines, a minimal ISP and the scoring
//! metrics.

pub mod cfa;
pub mod datagen;
pub mod dataset;
pub mod demosaic;
pub mod error;
pub mod isp;
pub mod metrics;
pub mod mraw;
pub mod noise;
pub mod raw;
pub mod remosaic;
pub mod scene;

pub use cfa::{CfaPattern, Channel, DiagonalConvention};
pub use error::{Error, Result};
pub use raw::{Levels, RawImage};
