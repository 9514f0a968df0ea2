//! Benchmark orchestration: remosaic every input with every algorithm,
//! score against ground truth, aggregate.
//!
//! Remosaic runs are serialized so timings do not contend with each other;
//! scoring of one scene's outputs runs in parallel afterwards.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rgbwkit_core::dataset::{gt_path, Split};
use rgbwkit_core::metrics::{aggregate, evaluate_against, Aggregates, EvalConfig, LpipsSource, LpipsTable, MetricRecord, Reference};
use rgbwkit_core::mraw;
use rgbwkit_core::remosaic::{run_remosaic, RemosaicAlgo, RunOptions};
use rgbwkit_core::{Error, RawImage, Result};
use serde::Serialize;

use crate::ingest::{CorruptFile, DatasetManifest, InputFile, SceneFiles};

/// Pixel count the 64M runtime estimate is scaled to.
pub const TARGET_PIXELS: f64 = 64.0e6;

/// Linear-in-pixels scaling of a measured runtime to a 64-megapixel input.
pub fn extrapolate_runtime(measured_s: f64, width: usize, height: usize) -> f64 {
    measured_s * TARGET_PIXELS / (width as f64 * height as f64)
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub eval: EvalConfig,
    /// Scores for a named algorithm; falls back to `default_lpips`.
    pub lpips: BTreeMap<String, LpipsTable>,
    pub default_lpips: LpipsTable,
    pub run: RunOptions,
    pub split: Option<Split>,
    /// Where hidden ground truth lives, laid out like the dataset root.
    pub gt_root: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            eval: EvalConfig::default(),
            lpips: BTreeMap::new(),
            default_lpips: LpipsTable::absent(),
            run: RunOptions::default(),
            split: None,
            gt_root: None,
        }
    }
}

impl BenchOptions {
    fn lpips_for(&self, algo: &str) -> &LpipsTable {
        self.lpips.get(algo).unwrap_or(&self.default_lpips)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemRuntime {
    pub scene_id: String,
    pub gain_db: f64,
    pub width: usize,
    pub height: usize,
    pub measured_s: f64,
    pub estimated_64m_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// Median of `repeats` algorithm-only runs after `warmup` discarded ones.
    Builtin { warmup: usize, repeats: usize },
    /// Whole subprocess wall-clock, including start-up and file I/O.
    Plugin,
    /// Externally produced predictions; nothing was timed.
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuntimeSummary {
    pub images: usize,
    /// Mean seconds per image at the measured resolution.
    pub measured_s: f64,
    /// `None` when inputs had differing sizes.
    pub resolution: Option<(usize, usize)>,
    /// Mean of the per-image 64M estimates.
    pub estimated_64m_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgoReport {
    pub name: String,
    pub timing: Timing,
    pub rows: Vec<MetricRecord>,
    pub runtimes: Vec<ItemRuntime>,
    /// `None` when every input failed.
    pub aggregates: Option<Aggregates>,
    pub failures: usize,
}

impl AlgoReport {
    pub fn runtime_summary(&self) -> Option<RuntimeSummary> {
        if self.runtimes.is_empty() {
            return None;
        }
        let n = self.runtimes.len() as f64;
        let first = (self.runtimes[0].width, self.runtimes[0].height);
        let uniform = self.runtimes.iter().all(|r| (r.width, r.height) == first);
        Some(RuntimeSummary {
            images: self.runtimes.len(),
            measured_s: self.runtimes.iter().map(|r| r.measured_s).sum::<f64>() / n,
            resolution: uniform.then_some(first),
            estimated_64m_s: self.runtimes.iter().map(|r| r.estimated_64m_s).sum::<f64>() / n,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub algo: String,
    pub scene_id: String,
    pub gain_db: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub scenes: usize,
    pub gains: Vec<f64>,
    pub split: Option<Split>,
    pub algos: Vec<AlgoReport>,
    pub failures: Vec<Failure>,
    #[serde(skip)]
    pub corrupt: Vec<CorruptFile>,
    pub notices: Vec<String>,
    pub eval: EvalConfig,
    pub environment: String,
}

impl BenchmarkReport {
    pub fn algo(&self, name: &str) -> Option<&AlgoReport> {
        self.algos.iter().find(|a| a.name == name)
    }

    pub fn lpips_absent(&self) -> bool {
        self.algos
            .iter()
            .flat_map(|a| &a.rows)
            .any(|r| r.lpips_source == LpipsSource::Absent)
    }

    /// Algorithms with aggregates, best first: M4 descending, then PSNR
    /// descending, then name.
    pub fn ranking(&self) -> Vec<&AlgoReport> {
        let mut ranked: Vec<&AlgoReport> = self.algos.iter().filter(|a| a.aggregates.is_some()).collect();
        ranked.sort_by(|a, b| {
            let (x, y) = (&a.aggregates.as_ref().unwrap().overall, &b.aggregates.as_ref().unwrap().overall);
            y.m4.total_cmp(&x.m4)
                .then(y.psnr.total_cmp(&x.psnr))
                .then(a.name.cmp(&b.name))
        });
        ranked
    }
}

pub fn environment_note() -> String {
    let threads = rayon::current_num_threads();
    let cores = std::thread::available_parallelism().map_or(0, |n| n.get());
    format!(
        "{}-{}, {cores} logical CPU(s), {threads} worker thread(s), rgbwkit {}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        env!("CARGO_PKG_VERSION")
    )
}

struct Prepared<'a> {
    scene: &'a SceneFiles,
    gt: RawImage,
}

fn selected<'a>(dataset: &'a DatasetManifest, opts: &BenchOptions, notices: &mut Vec<String>) -> Result<Vec<&'a SceneFiles>> {
    let scenes: Vec<&SceneFiles> = dataset
        .scenes
        .iter()
        .filter(|s| opts.split.is_none_or(|sp| s.split == sp))
        .filter(|s| !s.inputs.is_empty())
        .collect();
    if scenes.is_empty() {
        return Err(Error::InvalidParam(match opts.split {
            Some(sp) => format!("no readable scenes in split {sp:?}"),
            None => "no readable scenes".into(),
        }));
    }
    let mut usable = Vec::with_capacity(scenes.len());
    for s in scenes {
        if s.gt_hidden && opts.gt_root.is_none() {
            return Err(Error::InvalidParam(format!(
                "ground truth of scene {} is hidden; supply its location",
                s.id
            )));
        }
        if !s.gt_hidden && s.gt.is_none() {
            notices.push(format!("scene {} skipped: ground truth missing or corrupt", s.id));
            continue;
        }
        usable.push(s);
    }
    if usable.is_empty() {
        return Err(Error::InvalidParam("no scene has usable ground truth".into()));
    }
    Ok(usable)
}

fn load_gt<'a>(scene: &'a SceneFiles, opts: &BenchOptions) -> Result<Prepared<'a>> {
    let path = match (&opts.gt_root, &scene.gt) {
        (Some(root), _) => gt_path(root, &scene.id),
        (None, Some(p)) => p.clone(),
        (None, None) => unreachable!("filtered by selected()"),
    };
    let gt = mraw::read(&path)?;
    gt.require_gbrg()?;
    Ok(Prepared { scene, gt })
}

/// What one algorithm produced for one input, before scoring.
struct Produced<'a> {
    algo: usize,
    input: &'a InputFile,
    output: std::result::Result<(RawImage, Option<f64>), String>,
}

fn score_scene(
    prepared: &Prepared<'_>,
    produced: Vec<Produced<'_>>,
    names: &[String],
    opts: &BenchOptions,
    reports: &mut [AlgoReport],
    failures: &mut Vec<Failure>,
) -> Result<()> {
    let reference = Reference::new(&prepared.gt, &opts.eval)?;
    let scene_id = &prepared.scene.id;
    let scored: Vec<(usize, &InputFile, std::result::Result<(MetricRecord, Option<f64>), String>)> = produced
        .into_par_iter()
        .map(|p| {
            let result = p.output.and_then(|(img, runtime)| {
                let lpips = opts.lpips_for(&names[p.algo]).lookup(scene_id, p.input.gain_db);
                evaluate_against(&img, &reference, scene_id, p.input.gain_db, &opts.eval, lpips)
                    .map(|r| (r, runtime))
                    .map_err(|e| e.to_string())
            });
            (p.algo, p.input, result)
        })
        .collect();
    for (algo, input, result) in scored {
        let report = &mut reports[algo];
        match result {
            Ok((record, runtime)) => {
                if let Some(measured_s) = runtime {
                    report.runtimes.push(ItemRuntime {
                        scene_id: scene_id.clone(),
                        gain_db: input.gain_db,
                        width: input.width,
                        height: input.height,
                        measured_s,
                        estimated_64m_s: extrapolate_runtime(measured_s, input.width, input.height),
                    });
                }
                report.rows.push(record);
            }
            Err(reason) => {
                log::warn!("{} on {scene_id} at {} dB: {reason}", names[algo], input.gain_db);
                report.failures += 1;
                failures.push(Failure {
                    algo: names[algo].clone(),
                    scene_id: scene_id.clone(),
                    gain_db: input.gain_db,
                    reason,
                });
            }
        }
    }
    Ok(())
}

fn finish(
    dataset: &DatasetManifest,
    opts: &BenchOptions,
    scenes: usize,
    mut algos: Vec<AlgoReport>,
    failures: Vec<Failure>,
    mut notices: Vec<String>,
) -> Result<BenchmarkReport> {
    for a in &mut algos {
        if a.rows.is_empty() {
            notices.push(format!("{} failed on every input and is excluded from the ranking", a.name));
        } else {
            a.aggregates = Some(aggregate(&a.rows)?);
        }
    }
    if !dataset.corrupt.is_empty() {
        notices.push(format!("{} dataset file(s) could not be read and were skipped", dataset.corrupt.len()));
    }
    Ok(BenchmarkReport {
        dataset: dataset.root.display().to_string(),
        scenes,
        gains: dataset.gains(),
        split: opts.split,
        algos,
        failures,
        corrupt: dataset.corrupt.clone(),
        notices,
        eval: opts.eval.clone(),
        environment: environment_note(),
    })
}

fn empty_report(name: &str, timing: Timing) -> AlgoReport {
    AlgoReport {
        name: name.to_string(),
        timing,
        rows: Vec::new(),
        runtimes: Vec::new(),
        aggregates: None,
        failures: 0,
    }
}

/// Runs every algorithm on every selected input and scores the outputs.
/// Per-input failures are recorded; only dataset-level problems are errors.
pub fn run_benchmark(dataset: &DatasetManifest, algos: &[RemosaicAlgo], opts: &BenchOptions) -> Result<BenchmarkReport> {
    if algos.is_empty() {
        return Err(Error::InvalidParam("no algorithms to benchmark".into()));
    }
    for (i, a) in algos.iter().enumerate() {
        a.validate()?;
        if algos[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::InvalidParam(format!("algorithm {:?} listed twice", a.name)));
        }
    }
    let mut notices = Vec::new();
    let scenes = selected(dataset, opts, &mut notices)?;
    let names: Vec<String> = algos.iter().map(|a| a.name.clone()).collect();
    let mut reports: Vec<AlgoReport> = algos
        .iter()
        .map(|a| {
            let timing = if a.is_plugin() {
                Timing::Plugin
            } else {
                Timing::Builtin {
                    warmup: opts.run.timing.warmup,
                    repeats: opts.run.timing.repeats.max(1),
                }
            };
            empty_report(&a.name, timing)
        })
        .collect();
    let mut failures = Vec::new();
    let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;

    for scene in &scenes {
        let prepared = load_gt(scene, opts)?;
        log::info!("scene {} ({} inputs)", scene.id, scene.inputs.len());
        let mut produced = Vec::with_capacity(algos.len() * scene.inputs.len());
        for (ai, algo) in algos.iter().enumerate() {
            for input in &scene.inputs {
                let out_path = scratch.path().join(format!("{ai}_{}_{}db.bayer", scene.id, input.gain_db));
                let output = run_remosaic(algo, &input.path, &out_path, &opts.run)
                    .map(|o| {
                        if !o.log.is_empty() {
                            log::debug!("{} on {}:\n{}", algo.name, input.path.display(), o.log);
                        }
                        (o.output, Some(o.runtime_s))
                    })
                    .map_err(|e| e.to_string());
                let _ = std::fs::remove_file(&out_path);
                produced.push(Produced { algo: ai, input, output });
            }
        }
        score_scene(&prepared, produced, &names, opts, &mut reports, &mut failures)?;
    }
    finish(dataset, opts, scenes.len(), reports, failures, notices)
}

/// File name of an external prediction for one input.
pub fn prediction_file_name(gain_db: f64) -> String {
    format!("pred_{gain_db}db.bayer")
}

pub fn prediction_path(dir: &Path, scene_id: &str, gain_db: f64) -> PathBuf {
    dir.join(scene_id).join(prediction_file_name(gain_db))
}

/// Scores externally produced Bayers laid out as
/// `<dir>/<scene_id>/pred_<gain>db.bayer`.
pub fn score_predictions(dataset: &DatasetManifest, dir: &Path, name: &str, opts: &BenchOptions) -> Result<BenchmarkReport> {
    let mut notices = Vec::new();
    let scenes = selected(dataset, opts, &mut notices)?;
    let names = vec![name.to_string()];
    let mut reports = vec![empty_report(name, Timing::External)];
    let mut failures = Vec::new();
    for scene in &scenes {
        let prepared = load_gt(scene, opts)?;
        let produced = scene
            .inputs
            .iter()
            .map(|input| {
                let path = prediction_path(dir, &scene.id, input.gain_db);
                let output = mraw::read(&path)
                    .and_then(|img| {
                        img.require_gbrg()?;
                        Ok((img, None))
                    })
                    .map_err(|e| e.to_string());
                Produced { algo: 0, input, output }
            })
            .collect();
        score_scene(&prepared, produced, &names, opts, &mut reports, &mut failures)?;
    }
    finish(dataset, opts, scenes.len(), reports, failures, notices)
}
