//! Sparse same-channel interpolation with affine-exact convex weights.
//!
//! For a missing sample at `p` and the measured same-channel neighbours
//! `q_i` in a square window, the weights minimise `Σ |q_i − p|²·w_i²`
//! subject to `Σ w_i = 1` and `Σ w_i·(q_i − p) = 0`. The result is an
//! inverse-square-distance average corrected so that affine signals are
//! reproduced exactly. The window grows from `min_radius` until all weights
//! are non-negative; if none qualifies, plain inverse-square-distance
//! weights over the largest window are used.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cfa::{CfaPattern, Channel};
use crate::raw::mirror;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Tap {
    pub dx: isize,
    pub dy: isize,
    pub weight: f64,
}

pub(crate) fn affine_weights(offsets: &[(isize, isize)]) -> Option<Vec<f64>> {
    if offsets.len() < 2 {
        return None;
    }
    // Normal matrix Σ (1/d²)·[1, x, y]ᵀ[1, x, y].
    let mut m = [[0f64; 3]; 3];
    for &(dx, dy) in offsets {
        let (x, y) = (dx as f64, dy as f64);
        let inv = 1.0 / (x * x + y * y);
        let v = [1.0, x, y];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += inv * v[i] * v[j];
            }
        }
    }
    let lambda = solve3(m, [1.0, 0.0, 0.0])?;
    let weights: Vec<f64> = offsets
        .iter()
        .map(|&(dx, dy)| {
            let (x, y) = (dx as f64, dy as f64);
            (lambda[0] + lambda[1] * x + lambda[2] * y) / (x * x + y * y)
        })
        .collect();
    if weights.iter().any(|&w| w < -1e-12) {
        return None;
    }
    Some(weights.into_iter().map(|w| w.max(0.0)).collect())
}

fn inverse_square_weights(offsets: &[(isize, isize)]) -> Vec<f64> {
    let raw: Vec<f64> = offsets
        .iter()
        .map(|&(dx, dy)| 1.0 / (dx * dx + dy * dy) as f64)
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(&m);
    let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if d.abs() <= 1e-10 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        *slot = det(&mc) / d;
    }
    Some(out)
}

/// Kernel for one missing sample; `has(dx, dy)` tells whether the
/// neighbour at that offset measures the wanted channel.
pub(crate) fn build_kernel(
    has: impl Fn(isize, isize) -> bool,
    min_radius: isize,
    max_radius: isize,
) -> Vec<Tap> {
    let gather = |r: isize| -> Vec<(isize, isize)> {
        let mut v = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx, dy) != (0, 0) && has(dx, dy) {
                    v.push((dx, dy));
                }
            }
        }
        v
    };
    let to_taps = |offsets: &[(isize, isize)], weights: Vec<f64>| {
        offsets
            .iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .map(|(&(dx, dy), weight)| Tap { dx, dy, weight })
            .collect()
    };
    for r in min_radius..=max_radius {
        let offsets = gather(r);
        if let Some(w) = affine_weights(&offsets) {
            return to_taps(&offsets, w);
        }
    }
    let offsets = gather(max_radius);
    if offsets.is_empty() {
        return Vec::new();
    }
    to_taps(&offsets, inverse_square_weights(&offsets))
}

/// Fills one channel of a mosaic to full resolution.
pub(crate) struct Interpolator<'a> {
    pattern: &'a CfaPattern,
    width: usize,
    height: usize,
    min_radius: isize,
    max_radius: isize,
}

impl<'a> Interpolator<'a> {
    pub fn new(pattern: &'a CfaPattern, width: usize, height: usize, min_radius: isize, max_radius: isize) -> Self {
        Interpolator {
            pattern,
            width,
            height,
            min_radius,
            max_radius,
        }
    }

    /// `values` holds measured samples at sites of `channel`; other
    /// entries are ignored. Measured sites are returned unchanged.
    pub fn fill(&self, channel: Channel, values: &[f64]) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let (px, py) = (self.pattern.period_x(), self.pattern.period_y());
        let pattern = self.pattern;
        let mut interior: HashMap<(usize, usize), Vec<Tap>> = HashMap::new();
        for oy in 0..py {
            for ox in 0..px {
                if pattern.at(ox, oy) != channel {
                    let has = |dx: isize, dy: isize| {
                        let x = (ox as isize + dx).rem_euclid(px as isize) as usize;
                        let y = (oy as isize + dy).rem_euclid(py as isize) as usize;
                        pattern.at(x, y) == channel
                    };
                    interior.insert((ox, oy), build_kernel(has, self.min_radius, self.max_radius));
                }
            }
        }
        let r = self.max_radius as usize;
        let mut out = vec![0f64; w * h];
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, slot) in row.iter_mut().enumerate() {
                if pattern.at(x, y) == channel {
                    *slot = values[y * w + x];
                    continue;
                }
                let inside = x >= r && y >= r && x + r < w && y + r < h;
                let taps_owned;
                let taps: &[Tap] = if inside {
                    &interior[&(x % px, y % py)]
                } else {
                    let has = |dx: isize, dy: isize| {
                        let sx = mirror(x as isize + dx, w);
                        let sy = mirror(y as isize + dy, h);
                        pattern.at(sx, sy) == channel
                    };
                    taps_owned = build_kernel(has, self.min_radius, self.max_radius);
                    &taps_owned
                };
                let mut acc = 0.0;
                for t in taps {
                    let sx = mirror(x as isize + t.dx, w);
                    let sy = mirror(y as isize + t.dy, h);
                    acc += t.weight * values[sy * w + sx];
                }
                *slot = acc;
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_cross_gets_equal_weights() {
        let w = affine_weights(&[(1, 0), (-1, 0), (0, 1), (0, -1)]).unwrap();
        for v in w {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_reproduce_affine() {
        let offsets = [(-1, -2), (0, -1), (-1, 2), (2, 1), (-2, 1), (1, 3)];
        let w = affine_weights(&offsets).unwrap();
        let sum: f64 = w.iter().sum();
        let mx: f64 = offsets.iter().zip(&w).map(|(o, w)| o.0 as f64 * w).sum();
        let my: f64 = offsets.iter().zip(&w).map(|(o, w)| o.1 as f64 * w).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(mx.abs() < 1e-12 && my.abs() < 1e-12);
    }

    #[test]
    fn collinear_offsets_are_rejected() {
        assert!(affine_weights(&[(1, 0), (2, 0), (-1, 0)]).is_none());
    }

    #[test]
    fn rgbw_kernels_are_convex_everywhere() {
        let p = CfaPattern::rgbw_diag();
        for (min_r, max_r) in [(2, 3), (4, 4), (1, 1)] {
            for oy in 0..4 {
                for ox in 0..4 {
                    for c in Channel::ALL {
                        if p.at(ox, oy) == c || (min_r == 1 && c != Channel::W) {
                            continue;
                        }
                        let has = |dx: isize, dy: isize| {
                            p.at((ox as isize + dx).rem_euclid(4) as usize, (oy as isize + dy).rem_euclid(4) as usize) == c
                        };
                        let taps = build_kernel(has, min_r, max_r);
                        let total: f64 = taps.iter().map(|t| t.weight).sum();
                        assert!((total - 1.0).abs() < 1e-9);
                        assert!(taps.iter().all(|t| t.weight > 0.0));
                        // Affine-exactness: first moments vanish.
                        let mx: f64 = taps.iter().map(|t| t.dx as f64 * t.weight).sum();
                        let my: f64 = taps.iter().map(|t| t.dy as f64 * t.weight).sum();
                        assert!(mx.abs() < 1e-9 && my.abs() < 1e-9, "{ox},{oy},{c}");
                    }
                }
            }
        }
    }
}
