//! Color filter array layouts.
//!
//! A [`CfaPattern`] is a small periodic tile of [`Channel`] labels. Two
//! families ship as builtins: the 2×2 GBRG Bayer tile and the 4×4 RGBW tile
//! in which every 2×2 block carries one color on a diagonal and white on the
//! other, with the block colors themselves laid out GBRG.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
    W,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::R, Channel::G, Channel::B, Channel::W];

    /// Position of the channel in R, G, B, W order.
    pub fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
            Channel::W => 3,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
            Channel::W => "W",
        };
        f.write_str(s)
    }
}

/// Which diagonal of each 2×2 RGBW block holds the block color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalConvention {
    /// Color at (0,0) and (1,1) of the block, white on the anti-diagonal.
    MainColor,
    /// Color at (1,0) and (0,1) of the block, white on the main diagonal.
    AntiColor,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CfaPattern {
    name: String,
    period_x: usize,
    period_y: usize,
    tile: Vec<Channel>,
}

const GBRG_BLOCKS: [Channel; 4] = [Channel::G, Channel::B, Channel::R, Channel::G];

impl CfaPattern {
    /// Builds a pattern from a row-major tile, validating its shape.
    pub fn new(
        name: impl Into<String>,
        period_x: usize,
        period_y: usize,
        tile: Vec<Channel>,
    ) -> Result<Self> {
        for p in [period_x, period_y] {
            if p != 2 && p != 4 {
                return Err(Error::Pattern(format!("period {p} not in {{2, 4}}")));
            }
        }
        if tile.len() != period_x * period_y {
            return Err(Error::Pattern(format!(
                "tile has {} entries, expected {}",
                tile.len(),
                period_x * period_y
            )));
        }
        Ok(CfaPattern {
            name: name.into(),
            period_x,
            period_y,
            tile,
        })
    }

    pub fn bayer_gbrg() -> Self {
        CfaPattern {
            name: "BAYER_GBRG".into(),
            period_x: 2,
            period_y: 2,
            tile: GBRG_BLOCKS.to_vec(),
        }
    }

    /// The default RGBW layout: block color on the main diagonal.
    pub fn rgbw_diag() -> Self {
        Self::rgbw(DiagonalConvention::MainColor)
    }

    pub fn rgbw(convention: DiagonalConvention) -> Self {
        let mut tile = vec![Channel::W; 16];
        for y in 0..4 {
            for x in 0..4 {
                let block = GBRG_BLOCKS[(y / 2) * 2 + x / 2];
                let on_main = (x % 2) == (y % 2);
                let is_color = match convention {
                    DiagonalConvention::MainColor => on_main,
                    DiagonalConvention::AntiColor => !on_main,
                };
                if is_color {
                    tile[y * 4 + x] = block;
                }
            }
        }
        let name = match convention {
            DiagonalConvention::MainColor => "RGBW_DIAG",
            DiagonalConvention::AntiColor => "RGBW_DIAG_ANTI",
        };
        CfaPattern {
            name: name.into(),
            period_x: 4,
            period_y: 4,
            tile,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period_x(&self) -> usize {
        self.period_x
    }

    pub fn period_y(&self) -> usize {
        self.period_y
    }

    pub fn tile(&self) -> &[Channel] {
        &self.tile
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Channel {
        self.tile[(y % self.period_y) * self.period_x + (x % self.period_x)]
    }

    pub fn is_bayer_gbrg(&self) -> bool {
        self.period_x == 2 && self.period_y == 2 && self.tile == GBRG_BLOCKS
    }

    /// Returns the diagonal convention if this is one of the RGBW builtins.
    pub fn rgbw_convention(&self) -> Option<DiagonalConvention> {
        [DiagonalConvention::MainColor, DiagonalConvention::AntiColor]
            .into_iter()
            .find(|&c| {
                let builtin = Self::rgbw(c);
                self.period_x == 4 && self.period_y == 4 && self.tile == builtin.tile
            })
    }

    pub fn contains(&self, channel: Channel) -> bool {
        self.tile.contains(&channel)
    }

    /// Number of tile entries carrying each channel, in R, G, B, W order.
    pub fn census(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for c in &self.tile {
            counts[c.index()] += 1;
        }
        counts
    }
}

/// Channel label at pixel `(x, y)`; the pattern repeats indefinitely.
pub fn pattern_at(pattern: &CfaPattern, x: usize, y: usize) -> Channel {
    pattern.at(x, y)
}
