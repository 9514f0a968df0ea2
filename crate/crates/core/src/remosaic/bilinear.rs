use crate::cfa::Channel;
use crate::error::Result;
use crate::raw::RawImage;

use super::interp::Interpolator;
use super::{sample_bayer, scatter};

/// Smallest window searched for same-channel neighbours (5×5).
pub(crate) const MIN_RADIUS: isize = 2;
/// Windows grow to 7×7 where 5×5 cannot give convex affine weights.
pub(crate) const MAX_RADIUS: isize = 3;

/// Fills each Bayer channel with distance-weighted averages of measured
/// same-channel neighbours. Measured samples pass through unchanged.
pub fn remosaic_bilinear(rgbw: &RawImage) -> Result<RawImage> {
    let field = scatter(rgbw)?;
    let interp = Interpolator::new(rgbw.pattern(), field.width, field.height, MIN_RADIUS, MAX_RADIUS);
    let filled: Vec<Vec<f64>> = [Channel::R, Channel::G, Channel::B]
        .iter()
        .map(|&c| {
            let values: Vec<f64> = field.planes[c.index()].iter().map(|&v| f64::from(v)).collect();
            interp.fill(c, &values)
        })
        .collect();
    let w = field.width;
    sample_bayer(rgbw, |c, x, y| filled[c.index()][y * w + x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::CfaPattern;
    use crate::raw::{mirror, Levels};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_in_constant_out() {
        let img = RawImage::filled(12, 8, Levels::default(), CfaPattern::rgbw_diag(), 345).unwrap();
        let out = remosaic_bilinear(&img).unwrap();
        assert!(out.data().iter().all(|&v| v == 345));
    }

    #[test]
    fn affine_ramps_reconstruct_in_the_interior() {
        let (w, h) = (32, 24);
        let p = CfaPattern::rgbw_diag();
        let ramp = |c: Channel, x: usize, y: usize| -> f64 {
            let (a, bx, by) = match c {
                Channel::R => (100.0, 7.3, 2.1),
                Channel::G => (300.0, -3.7, 5.2),
                Channel::B => (50.0, 4.4, 9.9),
                Channel::W => (400.0, 1.0, -2.0),
            };
            a + bx * x as f64 + by * y as f64
        };
        let levels = Levels::default();
        let data = (0..w * h)
            .map(|i| levels.quantize(ramp(p.at(i % w, i / w), i % w, i / w)))
            .collect();
        let img = RawImage::new(w, h, levels, p, data).unwrap();
        let out = remosaic_bilinear(&img).unwrap();
        for y in MAX_RADIUS as usize..h - MAX_RADIUS as usize {
            for x in MAX_RADIUS as usize..w - MAX_RADIUS as usize {
                let expect = ramp(out.channel_at(x, y), x, y);
                let got = f64::from(out.get(x, y));
                assert!((got - expect).abs() <= 1.0, "({x},{y}) {got} vs {expect}");
            }
        }
    }

    #[test]
    fn output_within_local_measured_range_and_passes_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (w, h) = (16, 16);
        let data = (0..w * h).map(|_| rng.random_range(0..1024)).collect();
        let img = RawImage::new(w, h, Levels::default(), CfaPattern::rgbw_diag(), data).unwrap();
        let out = remosaic_bilinear(&img).unwrap();
        let r = MAX_RADIUS;
        for y in 0..h {
            for x in 0..w {
                let c = out.channel_at(x, y);
                let v = out.get(x, y);
                if img.channel_at(x, y) == c {
                    assert_eq!(v, img.get(x, y));
                    continue;
                }
                let (mut lo, mut hi) = (u16::MAX, 0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = mirror(x as isize + dx, w);
                        let sy = mirror(y as isize + dy, h);
                        if img.channel_at(sx, sy) == c {
                            lo = lo.min(img.get(sx, sy));
                            hi = hi.max(img.get(sx, sy));
                        }
                    }
                }
                assert!(lo <= v && v <= hi, "({x},{y}) {v} outside [{lo},{hi}]");
            }
        }
    }
}
