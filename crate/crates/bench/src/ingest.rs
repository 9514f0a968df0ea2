//! Reading and validating a dataset directory written by `datagen`.

use std::fs;
use std::path::{Path, PathBuf};

use rgbwkit_core::dataset::{gt_path, input_path, Manifest, Split};
use rgbwkit_core::mraw;
use rgbwkit_core::{Error, Result};

/// One noisy input of one scene.
#[derive(Clone, Debug, PartialEq)]
pub struct InputFile {
    pub gain_db: f64,
    pub path: PathBuf,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneFiles {
    pub id: String,
    pub split: Split,
    pub gt_hidden: bool,
    /// Present only when the ground truth is in this dataset and valid.
    pub gt: Option<PathBuf>,
    /// Valid inputs in ascending gain order.
    pub inputs: Vec<InputFile>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorruptFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub manifest: Manifest,
    /// Sorted by scene id.
    pub scenes: Vec<SceneFiles>,
    pub corrupt: Vec<CorruptFile>,
}

impl DatasetManifest {
    pub fn input_count(&self) -> usize {
        self.scenes.iter().map(|s| s.inputs.len()).sum()
    }

    pub fn gains(&self) -> Vec<f64> {
        let mut g = self.manifest.gains.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

fn probe(path: &Path) -> std::result::Result<(usize, usize, bool), String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    let img = mraw::decode(&bytes, path).map_err(|e| match e {
        Error::Format { reason, .. } => reason,
        other => other.to_string(),
    })?;
    Ok((img.width(), img.height(), img.pattern().is_bayer_gbrg()))
}

/// Loads `manifest.json` and checks every listed file. Unreadable files are
/// collected in `corrupt` instead of failing the whole dataset.
pub fn ingest(root: &Path) -> Result<DatasetManifest> {
    let manifest = Manifest::load(root)?;
    let mut entries = manifest.scenes.clone();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let mut gains = manifest.gains.clone();
    gains.sort_by(f64::total_cmp);
    gains.dedup();

    let mut scenes = Vec::new();
    let mut corrupt = Vec::new();
    let mut flag = |path: PathBuf, reason: String| {
        log::warn!("{}: {reason}", path.display());
        corrupt.push(CorruptFile { path, reason });
    };
    for entry in entries {
        let mut inputs = Vec::new();
        for &gain_db in &gains {
            let path = input_path(root, &entry.id, gain_db);
            match probe(&path) {
                Ok((_, _, true)) => flag(path, "expected an RGBW input, found a Bayer file".into()),
                Ok((width, height, false)) => inputs.push(InputFile { gain_db, path, width, height }),
                Err(reason) => flag(path, reason),
            }
        }
        let gt = if entry.gt_hidden {
            None
        } else {
            let path = gt_path(root, &entry.id);
            match probe(&path) {
                Ok((w, h, true)) => {
                    if let Some(bad) = inputs.iter().find(|i| (i.width, i.height) != (w, h)) {
                        flag(
                            path,
                            format!("ground truth is {w}x{h} but {} is {}x{}", bad.path.display(), bad.width, bad.height),
                        );
                        None
                    } else {
                        Some(path)
                    }
                }
                Ok(_) => {
                    flag(path, "ground truth is not a GBRG Bayer".into());
                    None
                }
                Err(reason) => {
                    flag(path, reason);
                    None
                }
            }
        };
        scenes.push(SceneFiles {
            id: entry.id,
            split: entry.split,
            gt_hidden: entry.gt_hidden,
            gt,
            inputs,
        });
    }
    let dataset = DatasetManifest {
        root: root.to_path_buf(),
        manifest,
        scenes,
        corrupt,
    };
    if dataset.input_count() == 0 {
        return Err(Error::InvalidParam(format!(
            "dataset {} has no readable inputs",
            root.display()
        )));
    }
    Ok(dataset)
}
