//! Minimal Bayer → display RGB pipeline: demosaic, white balance, color
//! matrix, transfer curve, 8-bit quantization.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demosaic::{malvar, RgbImage};
use crate::error::{Error, Result};
use crate::raw::RawImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    Srgb,
    Power(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IspConfig {
    pub wb: [f64; 3],
    pub ccm: [[f64; 3]; 3],
    pub gamma: Gamma,
}

impl Default for IspConfig {
    fn default() -> Self {
        IspConfig {
            wb: [1.0, 1.0, 1.0],
            ccm: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            gamma: Gamma::Srgb,
        }
    }
}

impl IspConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wb.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParam(format!("white-balance gains {:?} must be positive", self.wb)));
        }
        for (i, row) in self.ccm.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= 1e-6) {
                return Err(Error::InvalidParam(format!(
                    "color matrix row {i} sums to {sum}, expected 1"
                )));
            }
        }
        if let Gamma::Power(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParam(format!("gamma exponent {g}")));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: IspConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Interleaved 8-bit RGB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl DisplayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Size(format!(
                "{} bytes for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(DisplayImage { width, height, data })
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_ppm()).map_err(|e| Error::io(path, e))
    }
}

pub fn demosaic_full(bayer: &RawImage) -> Result<RgbImage> {
    malvar(bayer)
}

/// Channel gains, then the 3×3 matrix, then clamping to `[0, 1]`.
pub fn apply_wb_ccm(rgb: &RgbImage, cfg: &IspConfig) -> RgbImage {
    let n = rgb.width * rgb.height;
    let mut out = RgbImage::filled(rgb.width, rgb.height, [0.0; 3]);
    for i in 0..n {
        let v = [
            f64::from(rgb.r[i]) * cfg.wb[0],
            f64::from(rgb.g[i]) * cfg.wb[1],
            f64::from(rgb.b[i]) * cfg.wb[2],
        ];
        let m = |row: &[f64; 3]| (row[0] * v[0] + row[1] * v[1] + row[2] * v[2]).clamp(0.0, 1.0) as f32;
        out.r[i] = m(&cfg.ccm[0]);
        out.g[i] = m(&cfg.ccm[1]);
        out.b[i] = m(&cfg.ccm[2]);
    }
    out
}

/// Transfer curve plus round-half-up 8-bit quantization of one value.
#[inline]
pub fn encode_value(x: f64, gamma: Gamma) -> u8 {
    let x = x.clamp(0.0, 1.0);
    let y = match gamma {
        Gamma::Srgb => {
            if x <= 0.0031308 {
                12.92 * x
            } else {
                1.055 * x.powf(1.0 / 2.4) - 0.055
            }
        }
        Gamma::Power(g) => x.powf(1.0 / g),
    };
    (y * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn gamma_encode(rgb: &RgbImage, cfg: &IspConfig) -> DisplayImage {
    let n = rgb.width * rgb.height;
    let mut data = vec![0u8; n * 3];
    data.par_chunks_mut(3).enumerate().for_each(|(i, px)| {
        px[0] = encode_value(f64::from(rgb.r[i]), cfg.gamma);
        px[1] = encode_value(f64::from(rgb.g[i]), cfg.gamma);
        px[2] = encode_value(f64::from(rgb.b[i]), cfg.gamma);
    });
    DisplayImage {
        width: rgb.width,
        height: rgb.height,
        data,
    }
}

pub fn run_isp(bayer: &RawImage, cfg: &IspConfig) -> Result<DisplayImage> {
    cfg.validate()?;
    let rgb = demosaic_full(bayer)?;
    let balanced = apply_wb_ccm(&rgb, cfg);
    Ok(gamma_encode(&balanced, cfg))
}
