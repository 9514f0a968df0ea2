use crate::error::{Error, Result};
use crate::raw::{mirror, shuffle_planes, unshuffle_planes, Plane, RawImage};

/// Gaussian-smooths every pixel-shuffle plane so only same-phase (and so
/// same-channel) samples mix. `strength` is σ in plane pixels; 0 is a no-op.
pub fn denoise_prefilter(img: &RawImage, strength: f64) -> Result<RawImage> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::InvalidParam(format!("denoise strength {strength}")));
    }
    if strength == 0.0 {
        return Ok(img.clone());
    }
    let (kx, ky) = (img.pattern().period_x(), img.pattern().period_y());
    let kernel = gaussian_kernel(strength);
    let levels = img.levels();
    let planes: Vec<Plane<u16>> = shuffle_planes(img.data(), img.width(), img.height(), kx, ky)?
        .into_iter()
        .map(|p| blur(&p.map(f64::from), &kernel).map(|v| levels.quantize(v)))
        .collect();
    let (_, _, data) = unshuffle_planes(&planes, kx, ky)?;
    img.with_data(img.pattern().clone(), data)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn blur(p: &Plane<f64>, kernel: &[f64]) -> Plane<f64> {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (p.width, p.height);
    let mut tmp = Plane::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let acc = kernel
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * p.get(mirror(x as isize + k as isize - r, w), y))
                .sum();
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let acc = kernel
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * tmp.get(x, mirror(y as isize + k as isize - r, h)))
                .sum();
            out.set(x, y, acc);
        }
    }
    out
}
