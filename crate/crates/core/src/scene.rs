//! Procedural test scenes standing in for real RGBW captures.
//!
//! Each scene is a full-resolution linear radiance field with R, G, B and a
//! panchromatic W channel (`W = (R + G + B) / 2`), which is then sampled
//! through an RGBW pattern to produce a synthetic capture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfa::CfaPattern;
use crate::error::Result;
use crate::raw::{Levels, RawImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    ColorRamp,
    Wedge,
    Text,
    Texture,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [
        SceneKind::ColorRamp,
        SceneKind::Wedge,
        SceneKind::Text,
        SceneKind::Texture,
    ];

    /// Cycles through the kinds so any run of four scenes covers all of them.
    pub fn for_index(i: usize) -> Self {
        Self::ALL[i % Self::ALL.len()]
    }
}

/// Full-resolution R, G, B, W planes in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct RadianceField {
    pub width: usize,
    pub height: usize,
    pub rgbw: Vec<[f32; 4]>,
}

impl RadianceField {
    fn from_fn(width: usize, height: usize, f: impl Fn(f32, f32) -> [f32; 3]) -> Self {
        let mut rgbw = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let [r, g, b] = f(x as f32, y as f32).map(|v| v.clamp(0.02, 0.6));
                rgbw.push([r, g, b, ((r + g + b) * 0.5).min(1.0)]);
            }
        }
        RadianceField { width, height, rgbw }
    }

    /// Samples the field through `pattern`, quantizing to `levels`.
    pub fn capture(&self, pattern: &CfaPattern, levels: Levels) -> Result<RawImage> {
        let range = levels.range();
        let black = f64::from(levels.black_level);
        let data = self
            .rgbw
            .iter()
            .enumerate()
            .map(|(i, px)| {
                let (x, y) = (i % self.width, i / self.width);
                let v = px[pattern.at(x, y).index()];
                levels.quantize(f64::from(v) * range + black)
            })
            .collect();
        RawImage::new(self.width, self.height, levels, pattern.clone(), data)
    }
}

pub fn procedural_scene(kind: SceneKind, width: usize, height: usize, seed: u64) -> RadianceField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SceneKind::ColorRamp => color_ramp(width, height, &mut rng),
        SceneKind::Wedge => wedge(width, height, &mut rng),
        SceneKind::Text => text(width, height, &mut rng),
        SceneKind::Texture => texture(width, height, &mut rng),
    }
}

fn color_ramp(w: usize, h: usize, rng: &mut ChaCha8Rng) -> RadianceField {
    let (fw, fh) = (w as f32, h as f32);
    let phase: f32 = rng.random_range(0.0..std::f32::consts::TAU);
    let freq: f32 = rng.random_range(2.0..5.0);
    RadianceField::from_fn(w, h, move |x, y| {
        let (u, v) = (x / fw, y / fh);
        let wave = 0.08 * (freq * std::f32::consts::TAU * (u + 0.5 * v) + phase).sin();
        [
            0.05 + 0.5 * u + wave,
            0.05 + 0.5 * v - wave,
            0.55 - 0.25 * (u + v) + wave,
        ]
    })
}

fn wedge(w: usize, h: usize, rng: &mut ChaCha8Rng) -> RadianceField {
    let cx = w as f32 * rng.random_range(0.4..0.6);
    let cy = h as f32 * rng.random_range(0.4..0.6);
    let spokes: f32 = rng.random_range(24..48) as f32;
    let tint = [
        rng.random_range(0.6..1.0f32),
        rng.random_range(0.6..1.0f32),
        rng.random_range(0.6..1.0f32),
    ];
    let (fw, fh) = (w as f32, h as f32);
    RadianceField::from_fn(w, h, move |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        let theta = dy.atan2(dx);
        let star = if (spokes * theta).sin() >= 0.0 { 1.0 } else { 0.15 };
        let hue = [x / fw, y / fh, 1.0 - x / fw];
        [0, 1, 2].map(|c| 0.55 * star * tint[c] * (0.6 + 0.4 * hue[c]))
    })
}

fn text(w: usize, h: usize, rng: &mut ChaCha8Rng) -> RadianceField {
    // Glyph cells filled with 1-3 px strokes of dark ink on tinted paper.
    let cell = 12usize;
    let (cols, rows) = (w.div_ceil(cell), h.div_ceil(cell));
    let mut ink = vec![false; w * h];
    for cy in 0..rows {
        for cx in 0..cols {
            let strokes = rng.random_range(2..5);
            for _ in 0..strokes {
                let thick = rng.random_range(1..4usize);
                let horizontal = rng.random_bool(0.5);
                let (x0, y0) = (cx * cell + 1, cy * cell + 1);
                let off = rng.random_range(0..cell - 2 - thick);
                let len = rng.random_range(4..cell - 2);
                for a in 0..len {
                    for t in 0..thick {
                        let (x, y) = if horizontal {
                            (x0 + a, y0 + off + t)
                        } else {
                            (x0 + off + t, y0 + a)
                        };
                        if x < w && y < h {
                            ink[y * w + x] = true;
                        }
                    }
                }
            }
        }
    }
    let paper = [
        rng.random_range(0.4..0.6f32),
        rng.random_range(0.4..0.6f32),
        rng.random_range(0.35..0.55f32),
    ];
    let ink_color = [
        rng.random_range(0.02..0.15f32),
        rng.random_range(0.02..0.15f32),
        rng.random_range(0.02..0.2f32),
    ];
    RadianceField::from_fn(w, h, move |x, y| {
        if ink[y as usize * w + x as usize] {
            ink_color
        } else {
            paper
        }
    })
}

fn texture(w: usize, h: usize, rng: &mut ChaCha8Rng) -> RadianceField {
    // Three octaves of bilinear value noise per channel, sharing a luminance
    // base so colors stay correlated as in natural images.
    let octaves: Vec<ValueNoise> = [48usize, 16, 5]
        .iter()
        .map(|&s| ValueNoise::new(w, h, s, rng))
        .collect();
    let chroma: Vec<ValueNoise> = (0..3).map(|_| ValueNoise::new(w, h, 64, rng)).collect();
    RadianceField::from_fn(w, h, move |x, y| {
        let lum = 0.5 * octaves[0].at(x, y) + 0.3 * octaves[1].at(x, y) + 0.2 * octaves[2].at(x, y);
        [0, 1, 2].map(|c| lum * (0.4 + 0.6 * chroma[c].at(x, y)) * 0.9)
    })
}

struct ValueNoise {
    scale: f32,
    gw: usize,
    grid: Vec<f32>,
}

impl ValueNoise {
    fn new(w: usize, h: usize, scale: usize, rng: &mut ChaCha8Rng) -> Self {
        let gw = w / scale + 2;
        let gh = h / scale + 2;
        let grid = (0..gw * gh).map(|_| rng.random::<f32>()).collect();
        ValueNoise {
            scale: scale as f32,
            gw,
            grid,
        }
    }

    fn at(&self, x: f32, y: f32) -> f32 {
        let (u, v) = (x / self.scale, y / self.scale);
        let (i, j) = (u as usize, v as usize);
        let (tx, ty) = (u - i as f32, v - j as f32);
        let g = |a: usize, b: usize| self.grid[b * self.gw + a];
        let top = g(i, j) * (1.0 - tx) + g(i + 1, j) * tx;
        let bottom = g(i, j + 1) * (1.0 - tx) + g(i + 1, j + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}
