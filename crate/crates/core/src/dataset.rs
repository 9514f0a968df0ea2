//! On-disk dataset layout.
//!
//! ```text
//! <root>/manifest.json
//! <root>/<scene_id>/rgbw_<gain>db.rgbw
//! <root>/<scene_id>/gt.bayer
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::ScenePair;
use crate::error::{Error, Result};
use crate::mraw;
use crate::noise::NoiseTable;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GT_FILE: &str = "gt.bayer";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParam(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub id: String,
    #[serde(default)]
    pub split: Split,
    /// Ground truth withheld from this copy of the dataset.
    #[serde(default)]
    pub gt_hidden: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenes: Vec<SceneEntry>,
    pub gains: Vec<f64>,
    pub noise: NoiseTable,
    pub seed: u64,
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn input_file_name(gain_db: f64) -> String {
    format!("rgbw_{gain_db}db.rgbw")
}

pub fn input_path(root: &Path, scene_id: &str, gain_db: f64) -> PathBuf {
    root.join(scene_id).join(input_file_name(gain_db))
}

pub fn gt_path(root: &Path, scene_id: &str) -> PathBuf {
    root.join(scene_id).join(GT_FILE)
}

/// Parses the gain out of `rgbw_<gain>db.rgbw`.
pub fn parse_input_file_name(name: &str) -> Option<f64> {
    let gain = name.strip_prefix("rgbw_")?.strip_suffix("db.rgbw")?;
    let g: f64 = gain.parse().ok()?;
    (g >= 0.0 && g.is_finite()).then_some(g)
}

/// Writes all pairs of one scene. The shared ground truth is written once.
pub fn write_scene(root: &Path, pairs: &[ScenePair], write_gt: bool) -> Result<()> {
    let Some(first) = pairs.first() else {
        return Ok(());
    };
    let dir = root.join(&first.scene_id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if write_gt {
        mraw::write(gt_path(root, &first.scene_id), &first.gt_bayer)?;
    }
    for p in pairs {
        mraw::write(input_path(root, &p.scene_id, p.gain_db), &p.input_rgbw)?;
    }
    Ok(())
}
