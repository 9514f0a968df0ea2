//! White-guided color-difference remosaic.
//!
//! White is sampled on half the pixels in a checkerboard, so every non-white
//! site has four white neighbours; their mean gives a full white plane Ŵ.
//! For each color C the difference `C − Ŵ` is formed at measured C sites,
//! interpolated over a 9×9 support, and added back onto Ŵ.

use std::collections::BTreeMap;

use crate::cfa::Channel;
use crate::error::{Error, Result};
use crate::raw::RawImage;

use super::interp::Interpolator;
use super::{sample_bayer, scatter};

/// Parameter key: half-size of the color-difference support window.
pub const PARAM_DIFF_RADIUS: &str = "diff_radius";
const DEFAULT_DIFF_RADIUS: isize = 4;

pub fn remosaic_wguided(rgbw: &RawImage, params: &BTreeMap<String, f64>) -> Result<RawImage> {
    let radius = match params.get(PARAM_DIFF_RADIUS) {
        None => DEFAULT_DIFF_RADIUS,
        Some(&r) if (2.0..=8.0).contains(&r) && r.fract() == 0.0 => r as isize,
        Some(r) => {
            return Err(Error::InvalidParam(format!(
                "{PARAM_DIFF_RADIUS} must be an integer in 2..=8, got {r}"
            )))
        }
    };
    let field = scatter(rgbw)?;
    let (w, h) = (field.width, field.height);
    let pattern = rgbw.pattern();

    let raw: Vec<f64> = rgbw.data().iter().map(|&v| f64::from(v)).collect();
    let white = Interpolator::new(pattern, w, h, 1, 1).fill(Channel::W, &raw);

    let diff = Interpolator::new(pattern, w, h, radius, radius);
    let colors: Vec<Vec<f64>> = [Channel::R, Channel::G, Channel::B]
        .iter()
        .map(|&c| {
            let mask = &field.measured[c.index()];
            let d: Vec<f64> = raw
                .iter()
                .zip(&white)
                .zip(mask)
                .map(|((&v, &wh), &m)| if m { v - wh } else { 0.0 })
                .collect();
            diff.fill(c, &d)
                .into_iter()
                .zip(&white)
                .map(|(dc, &wh)| wh + dc)
                .collect()
        })
        .collect();
    sample_bayer(rgbw, |c, x, y| colors[c.index()][y * w + x])
}
