//! Signal-dependent Gaussian sensor noise and its photon-transfer calibration.
//!
//! The model adds `N(0, (Y - black)·σ_s² + σ_c²)` to every sample `Y`, with
//! shot and read variances in DN units.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::raw::RawImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Shot-noise variance per DN of signal.
    pub sigma_s_sq: f64,
    /// Signal-independent read-noise variance, DN².
    pub sigma_c_sq: f64,
    #[serde(default, skip_serializing)]
    pub gain_db: f64,
}

impl NoiseParams {
    pub fn new(sigma_s_sq: f64, sigma_c_sq: f64, gain_db: f64) -> Result<Self> {
        let p = NoiseParams {
            sigma_s_sq,
            sigma_c_sq,
            gain_db,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zero(gain_db: f64) -> Self {
        NoiseParams {
            sigma_s_sq: 0.0,
            sigma_c_sq: 0.0,
            gain_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s_sq >= 0.0 && self.sigma_c_sq >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "noise variances must be non-negative, got sigma_s_sq={} sigma_c_sq={}",
                self.sigma_s_sq, self.sigma_c_sq
            )));
        }
        if !(self.gain_db >= 0.0 && self.gain_db.is_finite()) {
            return Err(Error::InvalidParam(format!("gain {} dB", self.gain_db)));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_s_sq == 0.0 && self.sigma_c_sq == 0.0
    }

    /// Expected variance at a signal of `signal` DN above black.
    pub fn variance_at(&self, signal: f64) -> f64 {
        signal.max(0.0) * self.sigma_s_sq + self.sigma_c_sq
    }
}

/// Gain-scaled sensor model used when no noise table is configured.
///
/// With linear gain `g = 10^(dB/20)`: `σ_s² = k·g` and `σ_c² = (g·σ_r)²`.
/// These constants are placeholders, not measured sensor values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainModel {
    pub shot_k: f64,
    pub read_sigma: f64,
}

impl Default for GainModel {
    fn default() -> Self {
        GainModel {
            shot_k: 0.25,
            read_sigma: 1.5,
        }
    }
}

impl GainModel {
    /// 0 dB is the clean reference capture and gets no added noise.
    pub fn params(&self, gain_db: f64) -> NoiseParams {
        if gain_db == 0.0 {
            return NoiseParams::zero(0.0);
        }
        let g = 10f64.powf(gain_db / 20.0);
        NoiseParams {
            sigma_s_sq: self.shot_k * g,
            sigma_c_sq: (g * self.read_sigma).powi(2),
            gain_db,
        }
    }
}

/// Noise parameters keyed by gain, serialized with the gain's display form
/// (`"24"`, `"42"`) as the key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseTable(pub BTreeMap<String, NoiseParams>);

pub fn gain_key(gain_db: f64) -> String {
    format!("{gain_db}")
}

impl NoiseTable {
    pub fn from_model(model: &GainModel, gains: &[f64]) -> Self {
        NoiseTable(
            gains
                .iter()
                .map(|&g| (gain_key(g), model.params(g)))
                .collect(),
        )
    }

    pub fn get(&self, gain_db: f64) -> Option<NoiseParams> {
        self.0.get(&gain_key(gain_db)).map(|p| NoiseParams { gain_db, ..*p })
    }

    pub fn insert(&mut self, params: NoiseParams) {
        self.0.insert(gain_key(params.gain_db), params);
    }
}

/// Stable 64-bit seed for a `(seed, scene, gain)` triple.
pub fn derive_seed(seed: u64, scene_id: &str, gain_db: f64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((scene_id.len() as u64).to_le_bytes());
    h.update(scene_id.as_bytes());
    h.update(gain_db.to_bits().to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Adds model noise, then rounds half-up and clamps to `[0, white_level]`.
pub fn synthesize_noise(img: &RawImage, params: &NoiseParams, seed: u64) -> Result<RawImage> {
    params.validate()?;
    if params.is_zero() {
        return Ok(img.clone());
    }
    let levels = img.levels();
    let black = f64::from(levels.black_level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&y| {
            let y = f64::from(y);
            let sd = params.variance_at(y - black).sqrt();
            let z: f64 = StandardNormal.sample(&mut rng);
            levels.quantize(y + sd * z)
        })
        .collect();
    img.with_data(img.pattern().clone(), data)
}

/// A uniformly lit patch and its nominal level in DN.
#[derive(Clone, Debug)]
pub struct FlatPatch {
    pub mean_dn: f64,
    pub patch: RawImage,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseCalibration {
    pub params: NoiseParams,
    /// Coefficient of determination of the variance-vs-signal fit.
    pub r_squared: f64,
    /// Unclamped slope and intercept.
    pub raw_slope: f64,
    pub raw_intercept: f64,
}

pub const MIN_PATCH_SIDE: usize = 64;

fn sample_variance(data: &[u16]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    data.iter()
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0)
}

/// Fits `variance = σ_s²·(mean − black) + σ_c²` across flat patches.
///
/// The fit is least squares weighted by the inverse squared variance of
/// each sample-variance estimate (`Var(s²) ∝ σ⁴`), iterated twice from an
/// unweighted start. Slope and intercept are clamped at zero.
pub fn calibrate_noise(patches: &[FlatPatch], gain_db: f64) -> Result<NoiseCalibration> {
    let mut levels: Vec<f64> = patches.iter().map(|p| p.mean_dn).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "need at least 2 distinct mean levels, got {}",
            levels.len()
        )));
    }
    let mut xs = Vec::with_capacity(patches.len());
    let mut vs = Vec::with_capacity(patches.len());
    for p in patches {
        let (w, h) = (p.patch.width(), p.patch.height());
        if w < MIN_PATCH_SIDE || h < MIN_PATCH_SIDE {
            return Err(Error::Size(format!(
                "flat patch {w}x{h} smaller than {MIN_PATCH_SIDE}x{MIN_PATCH_SIDE}"
            )));
        }
        xs.push(p.mean_dn - f64::from(p.patch.levels().black_level));
        vs.push(sample_variance(p.patch.data()));
    }

    let mut weights = vec![1.0; xs.len()];
    let mut fit = weighted_line(&xs, &vs, &weights)?;
    for _ in 0..2 {
        for (w, &x) in weights.iter_mut().zip(&xs) {
            let predicted = (fit.0 * x + fit.1).max(1e-6);
            *w = 1.0 / (predicted * predicted);
        }
        fit = weighted_line(&xs, &vs, &weights)?;
    }
    let (slope, intercept) = fit;

    let mean_v = vs.iter().sum::<f64>() / vs.len() as f64;
    let ss_tot: f64 = vs.iter().map(|v| (v - mean_v).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&vs)
        .map(|(x, v)| (v - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    Ok(NoiseCalibration {
        params: NoiseParams {
            sigma_s_sq: slope.max(0.0),
            sigma_c_sq: intercept.max(0.0),
            gain_db,
        },
        r_squared,
        raw_slope: slope,
        raw_intercept: intercept,
    })
}

fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::InvalidParam("signal levels are not distinct".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
