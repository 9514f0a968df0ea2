//! Writing a complete synthetic dataset to disk.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rgbwkit_core::datagen::{generate_scene_pair, DatagenOptions, Upsample};
use rgbwkit_core::dataset::{write_scene, Manifest, SceneEntry, Split};
use rgbwkit_core::mraw;
use rgbwkit_core::noise::{derive_seed, GainModel, NoiseTable};
use rgbwkit_core::scene::{procedural_scene, SceneKind};
use rgbwkit_core::{CfaPattern, DiagonalConvention, Error, Levels, RawImage, Result};

#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub out: PathBuf,
    /// Procedural scene count; ignored when `captures` is non-empty.
    pub scenes: usize,
    pub width: usize,
    pub height: usize,
    pub gains: Vec<f64>,
    pub seed: u64,
    /// Entries override the default gain model per gain.
    pub noise: Option<NoiseTable>,
    pub upsample: Upsample,
    pub convention: DiagonalConvention,
    pub val: usize,
    pub test: usize,
    /// When set, test-split ground truth goes here instead of the dataset.
    pub hide_test_gt: Option<PathBuf>,
    /// RGBW MRAW1 captures to use instead of procedural scenes.
    pub captures: Vec<PathBuf>,
}

impl DatasetSpec {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        DatasetSpec {
            out: out.into(),
            scenes: 3,
            width: 2400,
            height: 3600,
            gains: vec![0.0, 24.0, 42.0],
            seed: 0,
            noise: None,
            upsample: Upsample::Nearest,
            convention: DiagonalConvention::MainColor,
            val: 0,
            test: 0,
            hide_test_gt: None,
            captures: Vec::new(),
        }
    }

    fn scene_count(&self) -> usize {
        if self.captures.is_empty() {
            self.scenes
        } else {
            self.captures.len()
        }
    }

    /// The model's parameters for every gain, overridden by explicit entries.
    pub fn noise_table(&self) -> NoiseTable {
        let mut table = NoiseTable::from_model(&GainModel::default(), &self.gains);
        if let Some(custom) = &self.noise {
            for &g in &self.gains {
                if let Some(p) = custom.get(g) {
                    table.insert(p);
                }
            }
        }
        table
    }
}

pub fn scene_id(index: usize, count: usize) -> String {
    let digits = count.to_string().len().max(2);
    format!("scene{:0digits$}", index + 1)
}

fn split_of(index: usize, spec: &DatasetSpec) -> Split {
    let n = spec.scene_count();
    if index >= n - spec.test {
        Split::Test
    } else if index >= n - spec.test - spec.val {
        Split::Val
    } else {
        Split::Train
    }
}

fn capture_for(index: usize, id: &str, spec: &DatasetSpec) -> Result<RawImage> {
    if let Some(path) = spec.captures.get(index) {
        let img = mraw::read(path)?;
        img.require_rgbw()?;
        return Ok(img);
    }
    let field = procedural_scene(
        SceneKind::for_index(index),
        spec.width,
        spec.height,
        derive_seed(spec.seed, &format!("{id}/radiance"), 0.0),
    );
    field.capture(&CfaPattern::rgbw(spec.convention), Levels::default())
}

/// Generates every scene (in parallel) and writes the manifest last.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Manifest> {
    let n = spec.scene_count();
    if n == 0 {
        return Err(Error::InvalidParam("dataset needs at least one scene".into()));
    }
    if spec.val + spec.test > n {
        return Err(Error::InvalidParam(format!(
            "{} validation + {} test scenes exceed {n} scenes",
            spec.val, spec.test
        )));
    }
    if spec.gains.is_empty() || spec.gains.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidParam(format!("gains {:?} must be finite and non-negative", spec.gains)));
    }
    let mut gains = spec.gains.clone();
    gains.sort_by(f64::total_cmp);
    gains.dedup();
    let noise = spec.noise_table();
    for dir in std::iter::once(&spec.out).chain(spec.hide_test_gt.as_ref()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let entries: Vec<SceneEntry> = (0..n)
        .into_par_iter()
        .map(|i| {
            let id = scene_id(i, n);
            let split = split_of(i, spec);
            let capture = capture_for(i, &id, spec)?;
            let opts = DatagenOptions {
                upsample: spec.upsample,
                ..DatagenOptions::default()
            };
            let pairs = generate_scene_pair(&capture, &id, &gains, &noise, spec.seed, &opts)?;
            let hidden = split == Split::Test && spec.hide_test_gt.is_some();
            write_scene(&spec.out, &pairs, !hidden)?;
            if let (true, Some(gt_root), Some(first)) = (hidden, &spec.hide_test_gt, pairs.first()) {
                let dir: &Path = gt_root.as_ref();
                let scene_dir = dir.join(&id);
                std::fs::create_dir_all(&scene_dir).map_err(|e| Error::io(&scene_dir, e))?;
                mraw::write(rgbwkit_core::dataset::gt_path(dir, &id), &first.gt_bayer)?;
            }
            log::info!("generated {id} ({split:?})");
            Ok(SceneEntry { id, split, gt_hidden: hidden })
        })
        .collect::<Result<_>>()?;

    let manifest = Manifest {
        scenes: entries,
        gains,
        noise,
        seed: spec.seed,
    };
    manifest.save(&spec.out)?;
    Ok(manifest)
}
