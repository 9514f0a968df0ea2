use std::sync::OnceLock;

use crate::cfa::CfaPattern;
use crate::error::Result;
use crate::raw::RawImage;

const SEARCH_RADIUS: isize = 4;

// Offsets ordered by squared distance, then dy, then dx.
fn search_order() -> &'static [(isize, isize)] {
    static ORDER: OnceLock<Vec<(isize, isize)>> = OnceLock::new();
    ORDER.get_or_init(|| {
        let r = SEARCH_RADIUS;
        let mut v: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dy, dx)))
            .collect();
        v.sort_by_key(|&(dy, dx)| (dx * dx + dy * dy, dy, dx));
        v
    })
}

/// Copies the closest measured sample of each required Bayer channel.
///
/// Candidates are searched inside the image only; ties go to the smallest
/// `(dy, dx)` in lexicographic order.
pub fn remosaic_nearest(rgbw: &RawImage) -> Result<RawImage> {
    rgbw.require_rgbw()?;
    let (w, h) = (rgbw.width() as isize, rgbw.height() as isize);
    let bayer = CfaPattern::bayer_gbrg();
    let order = search_order();
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let want = bayer.at(x as usize, y as usize);
            order
                .iter()
                .map(|&(dy, dx)| (x + dx, y + dy))
                .find(|&(sx, sy)| {
                    sx >= 0
                        && sy >= 0
                        && sx < w
                        && sy < h
                        && rgbw.channel_at(sx as usize, sy as usize) == want
                })
                .map(|(sx, sy)| rgbw.get(sx as usize, sy as usize))
                .unwrap_or_else(|| exhaustive(rgbw, x, y, want))
        })
        .collect();
    rgbw.with_data(bayer, data)
}

// Only reachable when the search window misses every site of a channel.
fn exhaustive(rgbw: &RawImage, x: isize, y: isize, want: crate::cfa::Channel) -> u16 {
    let mut best: Option<((isize, isize, isize), u16)> = None;
    for sy in 0..rgbw.height() as isize {
        for sx in 0..rgbw.width() as isize {
            if rgbw.channel_at(sx as usize, sy as usize) != want {
                continue;
            }
            let (dx, dy) = (sx - x, sy - y);
            let key = (dx * dx + dy * dy, dy, dx);
            if best.is_none_or(|(k, _)| key < k) {
                best = Some((key, rgbw.get(sx as usize, sy as usize)));
            }
        }
    }
    best.map_or(0, |(_, v)| v)
}
