//! Linear RGB images and Malvar–He–Cutler demosaicing of GBRG Bayer data.
//!
//! The 5×5 kernels are applied in integer arithmetic (weights scaled by 16)
//! so a constant input reproduces its value exactly. Borders use reflect-101
//! padding, which keeps the Bayer phase of every mirrored sample intact.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raw::{mirror, RawImage};

/// Three linear planes normalized to `[0, 1]` by the source's signal range.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub r: Vec<f32>,
    pub g: Vec<f32>,
    pub b: Vec<f32>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, r: Vec<f32>, g: Vec<f32>, b: Vec<f32>) -> Result<Self> {
        let n = width * height;
        if r.len() != n || g.len() != n || b.len() != n {
            return Err(Error::Size(format!(
                "RGB planes {}/{}/{} for {width}x{height}",
                r.len(),
                g.len(),
                b.len()
            )));
        }
        if r.iter().chain(&g).chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam("non-finite RGB sample".into()));
        }
        Ok(RgbImage { width, height, r, g, b })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let n = width * height;
        RgbImage {
            width,
            height,
            r: vec![rgb[0]; n],
            g: vec![rgb[1]; n],
            b: vec![rgb[2]; n],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = y * self.width + x;
        [self.r[i], self.g[i], self.b[i]]
    }

    pub fn planes(&self) -> [&[f32]; 3] {
        [&self.r, &self.g, &self.b]
    }
}

/// Anything that turns a GBRG Bayer into linear RGB.
pub trait Demosaicer: Send + Sync {
    fn demosaic(&self, bayer: &RawImage) -> Result<RgbImage>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Malvar;

impl Demosaicer for Malvar {
    fn demosaic(&self, bayer: &RawImage) -> Result<RgbImage> {
        malvar(bayer)
    }
}

type Kernel = [[i32; 5]; 5];

// Weights ×16.
const K_GREEN_AT_RB: Kernel = [
    [0, 0, -2, 0, 0],
    [0, 0, 4, 0, 0],
    [-2, 4, 8, 4, -2],
    [0, 0, 4, 0, 0],
    [0, 0, -2, 0, 0],
];
const K_HORIZONTAL: Kernel = [
    [0, 0, 1, 0, 0],
    [0, -2, 0, -2, 0],
    [-2, 8, 10, 8, -2],
    [0, -2, 0, -2, 0],
    [0, 0, 1, 0, 0],
];
const K_VERTICAL: Kernel = [
    [0, 0, -2, 0, 0],
    [0, -2, 8, -2, 0],
    [1, 0, 10, 0, 1],
    [0, -2, 8, -2, 0],
    [0, 0, -2, 0, 0],
];
const K_DIAGONAL: Kernel = [
    [0, 0, -3, 0, 0],
    [0, 4, 0, 4, 0],
    [-3, 0, 12, 0, -3],
    [0, 4, 0, 4, 0],
    [0, 0, -3, 0, 0],
];

enum Tap {
    Sample,
    Filter(&'static Kernel),
}

// Per GBRG phase (x % 2, y % 2), the recipe for R, G, B.
fn recipe(px: usize, py: usize) -> [Tap; 3] {
    use Tap::*;
    match (px, py) {
        // G on a G/B row: R above/below, B left/right.
        (0, 0) => [Filter(&K_VERTICAL), Sample, Filter(&K_HORIZONTAL)],
        (1, 0) => [Filter(&K_DIAGONAL), Filter(&K_GREEN_AT_RB), Sample],
        (0, 1) => [Sample, Filter(&K_GREEN_AT_RB), Filter(&K_DIAGONAL)],
        // G on an R/G row: R left/right, B above/below.
        _ => [Filter(&K_HORIZONTAL), Sample, Filter(&K_VERTICAL)],
    }
}

/// Kernel response ×16 at one pixel, in raw DN.
#[inline]
fn convolve(bayer: &RawImage, x: usize, y: usize, k: &Kernel, interior: bool) -> i64 {
    let (w, h) = (bayer.width(), bayer.height());
    let data = bayer.data();
    let mut acc = 0i64;
    for (ky, row) in k.iter().enumerate() {
        let sy = if interior {
            y + ky - 2
        } else {
            mirror(y as isize + ky as isize - 2, h)
        };
        let line = &data[sy * w..][..w];
        for (kx, &wt) in row.iter().enumerate() {
            if wt == 0 {
                continue;
            }
            let sx = if interior {
                x + kx - 2
            } else {
                mirror(x as isize + kx as isize - 2, w)
            };
            acc += i64::from(wt) * i64::from(line[sx]);
        }
    }
    acc
}

/// Demosaics a GBRG Bayer to linear RGB in `[0, 1]`.
pub fn malvar(bayer: &RawImage) -> Result<RgbImage> {
    bayer.require_gbrg()?;
    let (w, h) = (bayer.width(), bayer.height());
    let levels = bayer.levels();
    let black = f64::from(levels.black_level);
    let scale = 1.0 / levels.range();
    let norm = |sum16: i64| -> f32 { ((sum16 as f64 / 16.0 - black) * scale).clamp(0.0, 1.0) as f32 };

    let mut out = vec![[0f32; 3]; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let y_inner = y >= 2 && y + 2 < h;
        for (x, px) in row.iter_mut().enumerate() {
            let interior = y_inner && x >= 2 && x + 2 < w;
            let taps = recipe(x % 2, y % 2);
            for (c, tap) in taps.iter().enumerate() {
                let sum16 = match tap {
                    Tap::Sample => 16 * i64::from(bayer.get(x, y)),
                    Tap::Filter(k) => convolve(bayer, x, y, k, interior),
                };
                px[c] = norm(sum16);
            }
        }
    });

    let mut r = Vec::with_capacity(w * h);
    let mut g = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for [pr, pg, pb] in out {
        r.push(pr);
        g.push(pg);
        b.push(pb);
    }
    Ok(RgbImage { width: w, height: h, r, g, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::CfaPattern;
    use crate::raw::Levels;

    #[test]
    fn kernels_have_unit_dc_gain() {
        for k in [K_GREEN_AT_RB, K_HORIZONTAL, K_VERTICAL, K_DIAGONAL] {
            assert_eq!(k.iter().flatten().sum::<i32>(), 16);
        }
    }

    #[test]
    fn constant_bayer_is_constant_rgb() {
        let img = RawImage::filled(10, 8, Levels::default(), CfaPattern::bayer_gbrg(), 400).unwrap();
        let rgb = malvar(&img).unwrap();
        let expected = (400.0f64 / 1023.0) as f32;
        for p in rgb.planes() {
            assert!(p.iter().all(|&v| v == expected));
        }
        let white = RawImage::filled(6, 6, Levels::default(), CfaPattern::bayer_gbrg(), 1023).unwrap();
        let rgb = malvar(&white).unwrap();
        assert!(rgb.planes().iter().all(|p| p.iter().all(|&v| v == 1.0)));
    }

    #[test]
    fn measured_channel_passes_through() {
        let data = (0..64).map(|i| (i * 13 % 1000) as u16).collect();
        let img = RawImage::new(8, 8, Levels::default(), CfaPattern::bayer_gbrg(), data).unwrap();
        let rgb = malvar(&img).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let c = img.channel_at(x, y).index();
                let v = rgb.get(x, y)[c];
                assert_eq!(v, (img.get(x, y) as f64 / 1023.0) as f32);
            }
        }
    }

    #[test]
    fn rejects_rgbw() {
        let img = RawImage::filled(4, 4, Levels::default(), CfaPattern::rgbw_diag(), 1).unwrap();
        assert!(malvar(&img).is_err());
    }
}
