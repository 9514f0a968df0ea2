//! Aligned RGBW / Bayer pair generation.
//!
//! A full-resolution RGBW capture is diagonally binned into a half-resolution
//! Bayer (DBinB) and white plane (DBinC). DBinB is demosaiced, upsampled
//! together with DBinC into one four-channel field, and that single field is
//! sampled through both the RGBW and the Bayer pattern. Noise is then added
//! to the RGBW side only.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cfa::{CfaPattern, Channel};
use crate::demosaic::{Demosaicer, Malvar, RgbImage};
use crate::error::{Error, Result};
use crate::noise::{derive_seed, synthesize_noise, NoiseTable};
use crate::raw::{mirror, Levels, Plane, RawImage};

/// Averages the two same-color and the two white samples of every 2×2
/// block, rounding half up.
pub fn diagonal_bin(rgbw: &RawImage) -> Result<(RawImage, Plane<u16>)> {
    rgbw.require_rgbw()?;
    let (w, h) = (rgbw.width(), rgbw.height());
    let (hw, hh) = (w / 2, h / 2);
    let mut bayer = Vec::with_capacity(hw * hh);
    let mut white = Vec::with_capacity(hw * hh);
    for by in 0..hh {
        for bx in 0..hw {
            let (mut color, mut wsum) = (0u32, 0u32);
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (x, y) = (bx * 2 + dx, by * 2 + dy);
                let v = u32::from(rgbw.get(x, y));
                if rgbw.channel_at(x, y) == Channel::W {
                    wsum += v;
                } else {
                    color += v;
                }
            }
            bayer.push(((color + 1) / 2) as u16);
            white.push(((wsum + 1) / 2) as u16);
        }
    }
    let dbinb = RawImage::new(hw, hh, rgbw.levels(), CfaPattern::bayer_gbrg(), bayer)?;
    Ok((dbinb, Plane::new(hw, hh, white)?))
}

/// Demosaics the binned Bayer. Any [`Demosaicer`] can stand in for Malvar.
pub fn demosaic_half(dbinb: &RawImage, demosaicer: &dyn Demosaicer) -> Result<RgbImage> {
    demosaicer.demosaic(dbinb)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upsample {
    /// Each half-resolution value covers its 2×2 block.
    #[default]
    Nearest,
    Bilinear,
}

/// The four-channel full-resolution field, quantized to DN.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStack {
    pub width: usize,
    pub height: usize,
    /// Indexed by [`Channel::index`].
    pub planes: [Vec<u16>; 4],
}

impl ChannelStack {
    #[inline]
    pub fn get(&self, channel: Channel, x: usize, y: usize) -> u16 {
        self.planes[channel.index()][y * self.width + x]
    }

    /// Samples the field through `pattern`.
    pub fn mosaic(&self, pattern: &CfaPattern, levels: Levels) -> Result<RawImage> {
        let data = (0..self.width * self.height)
            .map(|i| {
                let (x, y) = (i % self.width, i / self.width);
                self.planes[pattern.at(x, y).index()][i]
            })
            .collect();
        RawImage::new(self.width, self.height, levels, pattern.clone(), data)
    }
}

/// Builds the 2× field from half-resolution RGB (normalized) and W (DN).
pub fn upsample_field(
    rgb_half: &RgbImage,
    w_half: &Plane<u16>,
    levels: Levels,
    method: Upsample,
) -> Result<ChannelStack> {
    if rgb_half.width != w_half.width || rgb_half.height != w_half.height {
        return Err(Error::Size(format!(
            "RGB {}x{} vs W {}x{}",
            rgb_half.width, rgb_half.height, w_half.width, w_half.height
        )));
    }
    let (hw, hh) = (rgb_half.width, rgb_half.height);
    let range = levels.range();
    let black = f64::from(levels.black_level);
    let half: [Vec<f64>; 4] = [
        rgb_half.r.iter().map(|&v| f64::from(v) * range + black).collect(),
        rgb_half.g.iter().map(|&v| f64::from(v) * range + black).collect(),
        rgb_half.b.iter().map(|&v| f64::from(v) * range + black).collect(),
        w_half.data.iter().map(|&v| f64::from(v)).collect(),
    ];
    let (w, h) = (hw * 2, hh * 2);
    let planes = half.map(|src| {
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let v = match method {
                    Upsample::Nearest => src[(y / 2) * hw + x / 2],
                    Upsample::Bilinear => bilinear_2x(&src, hw, hh, x, y),
                };
                out.push(levels.quantize(v));
            }
        }
        out
    });
    Ok(ChannelStack {
        width: w,
        height: h,
        planes,
    })
}

fn bilinear_2x(src: &[f64], hw: usize, hh: usize, x: usize, y: usize) -> f64 {
    // Full-res pixel centre x + 0.5 sits at half-res coordinate x/2 - 0.25.
    let u = x as f64 / 2.0 - 0.25;
    let v = y as f64 / 2.0 - 0.25;
    let (i0, j0) = (u.floor() as isize, v.floor() as isize);
    let (tx, ty) = (u - i0 as f64, v - j0 as f64);
    let s = |i: isize, j: isize| src[mirror(j, hh) * hw + mirror(i, hw)];
    let top = s(i0, j0) * (1.0 - tx) + s(i0 + 1, j0) * tx;
    let bottom = s(i0, j0 + 1) * (1.0 - tx) + s(i0 + 1, j0 + 1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Upsamples and mosaics into `(rgbw_full, bayer_full)`, both sampled from
/// one shared field.
pub fn upsample_and_mosaic(
    rgb_half: &RgbImage,
    w_half: &Plane<u16>,
    levels: Levels,
    method: Upsample,
    rgbw_pattern: &CfaPattern,
) -> Result<(RawImage, RawImage)> {
    let field = upsample_field(rgb_half, w_half, levels, method)?;
    Ok((
        field.mosaic(rgbw_pattern, levels)?,
        field.mosaic(&CfaPattern::bayer_gbrg(), levels)?,
    ))
}

/// Every intermediate of the noise-free generation chain.
#[derive(Clone, Debug)]
pub struct CleanScene {
    pub dbinb: RawImage,
    pub dbinc: Plane<u16>,
    pub rgb_half: RgbImage,
    pub rgbw: RawImage,
    pub bayer: RawImage,
}

pub struct DatagenOptions {
    pub upsample: Upsample,
    pub demosaicer: Box<dyn Demosaicer>,
}

impl Default for DatagenOptions {
    fn default() -> Self {
        DatagenOptions {
            upsample: Upsample::Nearest,
            demosaicer: Box::new(Malvar),
        }
    }
}

pub fn build_clean(capture: &RawImage, opts: &DatagenOptions) -> Result<CleanScene> {
    let (dbinb, dbinc) = diagonal_bin(capture)?;
    let rgb_half = demosaic_half(&dbinb, opts.demosaicer.as_ref())?;
    let (rgbw, bayer) = upsample_and_mosaic(
        &rgb_half,
        &dbinc,
        capture.levels(),
        opts.upsample,
        capture.pattern(),
    )?;
    Ok(CleanScene {
        dbinb,
        dbinc,
        rgb_half,
        rgbw,
        bayer,
    })
}

#[derive(Clone, Debug)]
pub struct ScenePair {
    pub scene_id: String,
    pub gain_db: f64,
    pub seed: u64,
    pub input_rgbw: RawImage,
    pub gt_bayer: Arc<RawImage>,
}

/// Runs the clean chain once and emits one noisy input per gain, all
/// sharing the same ground truth.
pub fn generate_scene_pair(
    capture: &RawImage,
    scene_id: &str,
    gains: &[f64],
    noise: &NoiseTable,
    seed: u64,
    opts: &DatagenOptions,
) -> Result<Vec<ScenePair>> {
    let clean = build_clean(capture, opts)?;
    pairs_from_clean(&clean, scene_id, gains, noise, seed)
}

pub fn pairs_from_clean(
    clean: &CleanScene,
    scene_id: &str,
    gains: &[f64],
    noise: &NoiseTable,
    seed: u64,
) -> Result<Vec<ScenePair>> {
    let gt = Arc::new(clean.bayer.clone());
    gains
        .iter()
        .map(|&gain_db| {
            let params = noise.get(gain_db).ok_or_else(|| {
                Error::InvalidParam(format!("noise table has no entry for {gain_db} dB"))
            })?;
            let pair_seed = derive_seed(seed, scene_id, gain_db);
            Ok(ScenePair {
                scene_id: scene_id.to_string(),
                gain_db,
                seed: pair_seed,
                input_rgbw: synthesize_noise(&clean.rgbw, &params, pair_seed)?,
                gt_bayer: Arc::clone(&gt),
            })
        })
        .collect()
}
