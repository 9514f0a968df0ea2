//! Image-quality scoring: PSNR and SSIM on ISP output, KLD on the Bayer
//! itself, external LPIPS, and the combined M4 score.

mod kld;
mod lpips;
mod ssim;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isp::{run_isp, DisplayImage, IspConfig};
use crate::noise::gain_key;
use crate::raw::RawImage;

pub use kld::{kl_divergence, kld, Histogram, DEFAULT_BINS, DEFAULT_EPS};
pub use lpips::{LpipsSource, LpipsTable};
pub use ssim::{ssim, ssim_plane, SsimMode};

pub const PSNR_CAP: f64 = 100.0;
pub const M4_MAX: f64 = 100.0;
pub const METRICS_CSV_HEADER: &str = "scene_id,gain_db,psnr,ssim,lpips,lpips_source,kld,m4";

pub fn psnr(reference: &DisplayImage, test: &DisplayImage) -> Result<f64> {
    if reference.width != test.width || reference.height != test.height {
        return Err(Error::Size(format!(
            "reference {}x{} vs test {}x{}",
            reference.width, reference.height, test.width, test.height
        )));
    }
    let sse: u64 = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(PSNR_CAP);
    }
    let mse = sse as f64 / reference.data.len() as f64;
    Ok((10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP))
}

/// `psnr · ssim · 2^(1 − lpips − kld)`, unclamped.
pub fn m4(psnr: f64, ssim: f64, lpips: f64, kld: f64) -> f64 {
    psnr * ssim * (1.0 - lpips - kld).exp2()
}

/// Clamps to `[0, 100]`, reporting whether clamping changed the value.
pub fn clamp_m4(value: f64) -> (f64, bool) {
    let c = value.clamp(0.0, M4_MAX);
    (c, c != value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub scene_id: String,
    pub gain_db: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub lpips: f64,
    pub lpips_source: LpipsSource,
    pub kld: f64,
    pub m4: f64,
    pub m4_clamped: bool,
}

impl MetricRecord {
    pub fn new(scene_id: impl Into<String>, gain_db: f64, psnr: f64, ssim: f64, lpips: (f64, LpipsSource), kld: f64) -> Self {
        let (m4, m4_clamped) = clamp_m4(m4(psnr, ssim, lpips.0, kld));
        MetricRecord {
            scene_id: scene_id.into(),
            gain_db,
            psnr,
            ssim,
            lpips: lpips.0,
            lpips_source: lpips.1,
            kld,
            m4,
            m4_clamped,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.4},{:.6},{:.6},{},{:.6},{:.4}",
            self.scene_id,
            gain_key(self.gain_db),
            self.psnr,
            self.ssim,
            self.lpips,
            self.lpips_source.as_str(),
            self.kld,
            self.m4
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub isp: IspConfig,
    pub bins: usize,
    pub eps: f64,
    pub ssim_mode: SsimMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            isp: IspConfig::default(),
            bins: DEFAULT_BINS,
            eps: DEFAULT_EPS,
            ssim_mode: SsimMode::PerChannel,
        }
    }
}

/// A ground-truth Bayer with its ISP rendering, reusable across predictions.
#[derive(Clone, Debug)]
pub struct Reference<'a> {
    pub bayer: &'a RawImage,
    pub display: DisplayImage,
}

impl<'a> Reference<'a> {
    pub fn new(bayer: &'a RawImage, cfg: &EvalConfig) -> Result<Self> {
        bayer.require_gbrg()?;
        Ok(Reference {
            bayer,
            display: run_isp(bayer, &cfg.isp)?,
        })
    }
}

pub fn evaluate_against(
    pred: &RawImage,
    reference: &Reference<'_>,
    scene_id: &str,
    gain_db: f64,
    cfg: &EvalConfig,
    lpips: (f64, LpipsSource),
) -> Result<MetricRecord> {
    let gt = reference.bayer;
    if !pred.same_geometry(gt) {
        return Err(Error::Size(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    pred.require_gbrg()?;
    let shown = run_isp(pred, &cfg.isp)?;
    let p = psnr(&reference.display, &shown)?;
    let s = ssim(&reference.display, &shown, cfg.ssim_mode)?;
    let k = kld(pred, gt, cfg.bins, cfg.eps)?;
    Ok(MetricRecord::new(scene_id, gain_db, p, s, lpips, k))
}

pub fn evaluate_pair(
    pred: &RawImage,
    gt: &RawImage,
    scene_id: &str,
    gain_db: f64,
    cfg: &EvalConfig,
    lpips: (f64, LpipsSource),
) -> Result<MetricRecord> {
    if !pred.same_geometry(gt) {
        return Err(Error::Size(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    evaluate_against(pred, &Reference::new(gt, cfg)?, scene_id, gain_db, cfg, lpips)
}

/// Column means over a set of records; M4 is the mean of per-image M4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub lpips: f64,
    pub kld: f64,
    pub m4: f64,
    pub lpips_absent: usize,
    pub m4_clamped: usize,
}

impl Aggregate {
    pub fn of(records: &[&MetricRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidParam("cannot aggregate zero records".into()));
        }
        let n = records.len() as f64;
        let mean = |f: fn(&MetricRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n;
        Ok(Aggregate {
            count: records.len(),
            psnr: mean(|r| r.psnr),
            ssim: mean(|r| r.ssim),
            lpips: mean(|r| r.lpips),
            kld: mean(|r| r.kld),
            m4: mean(|r| r.m4),
            lpips_absent: records.iter().filter(|r| r.lpips_source == LpipsSource::Absent).count(),
            m4_clamped: records.iter().filter(|r| r.m4_clamped).count(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub overall: Aggregate,
    /// Keyed by the canonical gain string.
    pub per_gain: BTreeMap<String, Aggregate>,
}

pub fn aggregate(records: &[MetricRecord]) -> Result<Aggregates> {
    let all: Vec<&MetricRecord> = records.iter().collect();
    let overall = Aggregate::of(&all)?;
    let mut groups: BTreeMap<String, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(gain_key(r.gain_db)).or_default().push(r);
    }
    let per_gain = groups
        .into_iter()
        .map(|(k, v)| Aggregate::of(&v).map(|a| (k, a)))
        .collect::<Result<_>>()?;
    Ok(Aggregates { overall, per_gain })
}

pub fn metrics_csv(records: &[MetricRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(METRICS_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}
