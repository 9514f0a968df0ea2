//! RGBW → GBRG Bayer remosaicing at the same resolution.

mod denoise;
mod interp;
mod nearest;
mod runner;
mod bilinear;
mod wguided;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cfa::{CfaPattern, Channel};
use crate::error::{Error, Result};
use crate::raw::RawImage;

pub use denoise::denoise_prefilter;
pub use nearest::remosaic_nearest;
pub use runner::{run_plugin, run_remosaic, RunOptions, RunOutcome, TimingProtocol};
pub use bilinear::remosaic_bilinear;
pub use wguided::remosaic_wguided;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoKind {
    Nearest,
    Bilinear,
    Wguided,
    Plugin,
}

impl FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(AlgoKind::Nearest),
            "bilinear" => Ok(AlgoKind::Bilinear),
            "wguided" => Ok(AlgoKind::Wguided),
            "plugin" => Ok(AlgoKind::Plugin),
            other => Err(Error::InvalidParam(format!(
                "unknown algorithm {other:?} (expected nearest, bilinear, wguided or plugin)"
            ))),
        }
    }
}

/// Parameter key for the optional same-channel denoise prefilter strength.
pub const PARAM_DENOISE: &str = "denoise";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemosaicAlgo {
    pub name: String,
    pub kind: AlgoKind,
    /// Executable invocation; input and output paths are appended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl RemosaicAlgo {
    pub fn builtin(kind: AlgoKind) -> Self {
        let name = match kind {
            AlgoKind::Nearest => "nearest",
            AlgoKind::Bilinear => "bilinear",
            AlgoKind::Wguided => "wguided",
            AlgoKind::Plugin => "plugin",
        };
        RemosaicAlgo {
            name: name.into(),
            kind,
            command: None,
            params: BTreeMap::new(),
        }
    }

    pub fn plugin(name: impl Into<String>, command: impl Into<String>) -> Self {
        RemosaicAlgo {
            name: name.into(),
            kind: AlgoKind::Plugin,
            command: Some(command.into()),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == AlgoKind::Plugin && self.command.as_deref().is_none_or(|c| c.trim().is_empty()) {
            return Err(Error::InvalidParam(format!(
                "plugin algorithm {:?} has no command",
                self.name
            )));
        }
        Ok(())
    }

    pub fn is_plugin(&self) -> bool {
        self.kind == AlgoKind::Plugin
    }

    /// Runs a builtin in memory. Plugins must go through [`run_remosaic`].
    pub fn apply(&self, rgbw: &RawImage) -> Result<RawImage> {
        self.validate()?;
        let strength = self.params.get(PARAM_DENOISE).copied().unwrap_or(0.0);
        let filtered;
        let input = if strength > 0.0 {
            filtered = denoise_prefilter(rgbw, strength)?;
            &filtered
        } else {
            rgbw
        };
        match self.kind {
            AlgoKind::Nearest => remosaic_nearest(input),
            AlgoKind::Bilinear => remosaic_bilinear(input),
            AlgoKind::Wguided => remosaic_wguided(input, &self.params),
            AlgoKind::Plugin => Err(Error::InvalidParam(
                "plugin algorithms run as subprocesses".into(),
            )),
        }
    }
}

/// Per-channel full-resolution planes with measured-sample masks.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelField {
    pub width: usize,
    pub height: usize,
    /// Indexed by [`Channel::index`]; zero where not measured.
    pub planes: [Vec<f32>; 4],
    pub measured: [Vec<bool>; 4],
}

impl ChannelField {
    pub fn is_measured(&self, channel: Channel, x: usize, y: usize) -> bool {
        self.measured[channel.index()][y * self.width + x]
    }

    pub fn value(&self, channel: Channel, x: usize, y: usize) -> f32 {
        self.planes[channel.index()][y * self.width + x]
    }
}

/// Copies each measured sample into its channel plane.
pub fn scatter(rgbw: &RawImage) -> Result<ChannelField> {
    rgbw.require_rgbw()?;
    let (w, h) = (rgbw.width(), rgbw.height());
    let mut planes: [Vec<f32>; 4] = std::array::from_fn(|_| vec![0.0; w * h]);
    let mut measured: [Vec<bool>; 4] = std::array::from_fn(|_| vec![false; w * h]);
    for y in 0..h {
        for x in 0..w {
            let c = rgbw.channel_at(x, y).index();
            planes[c][y * w + x] = f32::from(rgbw.get(x, y));
            measured[c][y * w + x] = true;
        }
    }
    Ok(ChannelField {
        width: w,
        height: h,
        planes,
        measured,
    })
}

/// Samples per-channel full-resolution estimates through GBRG.
pub(crate) fn sample_bayer(rgbw: &RawImage, estimate: impl Fn(Channel, usize, usize) -> f64) -> Result<RawImage> {
    let levels = rgbw.levels();
    let bayer = CfaPattern::bayer_gbrg();
    let (w, h) = (rgbw.width(), rgbw.height());
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            levels.quantize(estimate(bayer.at(x, y), x, y))
        })
        .collect();
    rgbw.with_data(bayer, data)
}
