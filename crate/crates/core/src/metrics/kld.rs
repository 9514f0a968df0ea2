//! Value-histogram KL divergence between two Bayer images.
//!
//! Conventions: equal-width bins over the normalized range `[0, 1]`, every
//! bin smoothed by `eps` and renormalized, direction KL(gt ‖ pred), natural
//! logarithm.

use crate::error::{Error, Result};
use crate::raw::RawImage;

pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub masses: Vec<f64>,
    pub eps: f64,
}

impl Histogram {
    pub fn of_raw(img: &RawImage, bins: usize, eps: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParam("histogram needs at least one bin".into()));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidParam(format!("smoothing epsilon {eps}")));
        }
        let levels = img.levels();
        let black = f64::from(levels.black_level);
        let range = levels.range();
        let mut counts = vec![0u64; bins];
        for &v in img.data() {
            let t = ((f64::from(v) - black) / range).clamp(0.0, 1.0);
            let bin = ((t * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        Ok(Self::from_counts(&counts, eps))
    }

    pub fn from_counts(counts: &[u64], eps: f64) -> Self {
        let n: u64 = counts.iter().sum();
        let raw: Vec<f64> = counts
            .iter()
            .map(|&c| if n > 0 { c as f64 / n as f64 } else { 0.0 } + eps)
            .collect();
        let total: f64 = raw.iter().sum();
        Histogram {
            masses: raw.into_iter().map(|m| m / total).collect(),
            eps,
        }
    }
}

/// Σ p·ln(p/q) over bins.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Size(format!("{} vs {} bins", p.len(), q.len())));
    }
    let d: f64 = p
        .iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum();
    Ok(d.max(0.0))
}

pub fn kld(pred: &RawImage, gt: &RawImage, bins: usize, eps: f64) -> Result<f64> {
    if !pred.same_geometry(gt) {
        return Err(Error::Size(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    pred.require_gbrg()?;
    gt.require_gbrg()?;
    let p = Histogram::of_raw(gt, bins, eps)?;
    let q = Histogram::of_raw(pred, bins, eps)?;
    kl_divergence(&p.masses, &q.masses)
}
