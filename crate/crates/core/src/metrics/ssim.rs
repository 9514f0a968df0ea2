//! Single-scale SSIM with an 11×11 Gaussian window (σ = 1.5).
//!
//! Statistics are taken only at window positions that fit entirely inside
//! the image, so no padding enters the score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isp::DisplayImage;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;
pub const DYNAMIC_RANGE: f64 = 255.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsimMode {
    /// SSIM of R, G and B separately, averaged.
    #[default]
    PerChannel,
    /// SSIM of BT.601 luma only.
    Luma,
}

fn window() -> [f64; WINDOW] {
    let r = (WINDOW / 2) as f64;
    let mut w = [0.0; WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Valid-mode separable filtering.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - WINDOW, h + 1 - WINDOW);
    let mut rows = vec![0.0; ow * h];
    rows.par_chunks_mut(ow).enumerate().for_each(|(y, out)| {
        let line = &src[y * w..][..w];
        for (x, slot) in out.iter_mut().enumerate() {
            *slot = k.iter().zip(&line[x..x + WINDOW]).map(|(a, b)| a * b).sum();
        }
    });
    let mut out = vec![0.0; ow * oh];
    out.par_chunks_mut(ow).enumerate().for_each(|(y, line)| {
        for (x, slot) in line.iter_mut().enumerate() {
            *slot = k
                .iter()
                .enumerate()
                .map(|(i, a)| a * rows[(y + i) * ow + x])
                .sum();
        }
    });
    out
}

/// Mean SSIM of two equally sized single-channel planes.
pub fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> Result<f64> {
    if a.len() != w * h || b.len() != w * h {
        return Err(Error::Size("SSIM planes do not match their geometry".into()));
    }
    if w < WINDOW || h < WINDOW {
        return Err(Error::Size(format!(
            "SSIM needs at least {WINDOW}x{WINDOW}, got {w}x{h}"
        )));
    }
    let k = window();
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, w, h, &k);
    let mu_b = filter_valid(b, w, h, &k);
    let e_aa = filter_valid(&aa, w, h, &k);
    let e_bb = filter_valid(&bb, w, h, &k);
    let e_ab = filter_valid(&ab, w, h, &k);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / n as f64)
}

pub fn ssim(reference: &DisplayImage, test: &DisplayImage, mode: SsimMode) -> Result<f64> {
    if reference.width != test.width || reference.height != test.height {
        return Err(Error::Size(format!(
            "reference {}x{} vs test {}x{}",
            reference.width, reference.height, test.width, test.height
        )));
    }
    let (w, h) = (reference.width, reference.height);
    let channel = |img: &DisplayImage, c: usize| -> Vec<f64> {
        img.data.chunks_exact(3).map(|px| f64::from(px[c])).collect()
    };
    match mode {
        SsimMode::PerChannel => {
            let mut sum = 0.0;
            for c in 0..3 {
                sum += ssim_plane(&channel(reference, c), &channel(test, c), w, h)?;
            }
            Ok(sum / 3.0)
        }
        SsimMode::Luma => {
            let luma = |img: &DisplayImage| -> Vec<f64> {
                img.data
                    .chunks_exact(3)
                    .map(|px| 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]))
                    .collect()
            };
            ssim_plane(&luma(reference), &luma(test), w, h)
        }
    }
}
