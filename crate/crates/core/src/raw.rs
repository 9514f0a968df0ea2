//! Mosaiced raw images and the pixel shuffle rearrangement.

use serde::{Deserialize, Serialize};

use crate::cfa::{CfaPattern, Channel};
use crate::error::{Error, Result};

/// Sensor quantization: bit depth plus black and white levels in DN.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Levels {
    pub bit_depth: u16,
    pub black_level: u16,
    pub white_level: u16,
}

impl Default for Levels {
    fn default() -> Self {
        Levels {
            bit_depth: 10,
            black_level: 0,
            white_level: 1023,
        }
    }
}

impl Levels {
    pub fn validate(&self) -> Result<()> {
        if self.bit_depth == 0 || self.bit_depth > 16 {
            return Err(Error::InvalidParam(format!(
                "bit depth {} outside 1..=16",
                self.bit_depth
            )));
        }
        let max = ((1u32 << self.bit_depth) - 1) as u16;
        if self.white_level > max {
            return Err(Error::InvalidParam(format!(
                "white level {} exceeds {}-bit maximum {max}",
                self.white_level, self.bit_depth
            )));
        }
        if self.black_level >= self.white_level {
            return Err(Error::InvalidParam(format!(
                "black level {} not below white level {}",
                self.black_level, self.white_level
            )));
        }
        Ok(())
    }

    /// White minus black, the usable signal range.
    pub fn range(&self) -> f64 {
        f64::from(self.white_level - self.black_level)
    }

    /// Rounds half-up and clamps to `[0, white_level]`.
    #[inline]
    pub fn quantize(&self, dn: f64) -> u16 {
        let v = (dn + 0.5).floor();
        v.clamp(0.0, f64::from(self.white_level)) as u16
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    levels: Levels,
    pattern: CfaPattern,
    data: Vec<u16>,
}

impl RawImage {
    pub fn new(
        width: usize,
        height: usize,
        levels: Levels,
        pattern: CfaPattern,
        data: Vec<u16>,
    ) -> Result<Self> {
        levels.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::Size(format!("empty image {width}x{height}")));
        }
        if width % pattern.period_x() != 0 || height % pattern.period_y() != 0 {
            return Err(Error::Size(format!(
                "{width}x{height} not divisible by {} period {}x{}",
                pattern.name(),
                pattern.period_x(),
                pattern.period_y()
            )));
        }
        if data.len() != width * height {
            return Err(Error::Size(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some((i, &v)) = data
            .iter()
            .enumerate()
            .find(|(_, &v)| v > levels.white_level)
        {
            return Err(Error::InvalidParam(format!(
                "sample {v} at index {i} exceeds white level {}",
                levels.white_level
            )));
        }
        Ok(RawImage {
            width,
            height,
            levels,
            pattern,
            data,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        levels: Levels,
        pattern: CfaPattern,
        value: u16,
    ) -> Result<Self> {
        Self::new(width, height, levels, pattern, vec![value; width * height])
    }

    /// Same geometry and levels, new samples and pattern.
    pub fn with_data(&self, pattern: CfaPattern, data: Vec<u16>) -> Result<Self> {
        Self::new(self.width, self.height, self.levels, pattern, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> Levels {
        self.levels
    }

    pub fn pattern(&self) -> &CfaPattern {
        &self.pattern
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn channel_at(&self, x: usize, y: usize) -> Channel {
        self.pattern.at(x, y)
    }

    pub fn same_geometry(&self, other: &RawImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn require_rgbw(&self) -> Result<()> {
        if self.pattern.rgbw_convention().is_none() {
            return Err(Error::Pattern(format!(
                "expected an RGBW diagonal pattern, got {}",
                self.pattern.name()
            )));
        }
        Ok(())
    }

    pub fn require_gbrg(&self) -> Result<()> {
        if !self.pattern.is_bayer_gbrg() {
            return Err(Error::Pattern(format!(
                "expected BAYER_GBRG, got {}",
                self.pattern.name()
            )));
        }
        Ok(())
    }
}

/// A dense row-major 2-D array.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Size(format!(
                "{} values for a {width}x{height} plane",
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PlaneLabel {
    pub channel: Channel,
    pub offset_x: usize,
    pub offset_y: usize,
}

/// The space-to-depth view of a raw image: one plane per tile offset.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneStack<T = u16> {
    pub planes: Vec<Plane<T>>,
    pub labels: Vec<PlaneLabel>,
}

impl<T: Copy> PlaneStack<T> {
    pub fn plane_width(&self) -> usize {
        self.planes.first().map_or(0, |p| p.width)
    }

    pub fn plane_height(&self) -> usize {
        self.planes.first().map_or(0, |p| p.height)
    }
}

/// Splits `data` (width × height) into `kx·ky` phase planes, ordered
/// row-major by (offset_y, offset_x).
pub fn shuffle_planes<T: Copy>(
    data: &[T],
    width: usize,
    height: usize,
    kx: usize,
    ky: usize,
) -> Result<Vec<Plane<T>>> {
    if width % kx != 0 || height % ky != 0 || data.len() != width * height {
        return Err(Error::Size(format!(
            "{width}x{height} cannot be shuffled with period {kx}x{ky}"
        )));
    }
    let (pw, ph) = (width / kx, height / ky);
    let mut planes = Vec::with_capacity(kx * ky);
    for i in 0..ky {
        for j in 0..kx {
            let mut out = Vec::with_capacity(pw * ph);
            for y in 0..ph {
                let row = &data[(y * ky + i) * width..][..width];
                out.extend((0..pw).map(|x| row[x * kx + j]));
            }
            planes.push(Plane {
                width: pw,
                height: ph,
                data: out,
            });
        }
    }
    Ok(planes)
}

/// Inverse of [`shuffle_planes`].
pub fn unshuffle_planes<T: Copy + Default>(
    planes: &[Plane<T>],
    kx: usize,
    ky: usize,
) -> Result<(usize, usize, Vec<T>)> {
    if planes.len() != kx * ky {
        return Err(Error::Size(format!(
            "{} planes for a {kx}x{ky} period (need {})",
            planes.len(),
            kx * ky
        )));
    }
    let (pw, ph) = (planes[0].width, planes[0].height);
    if let Some(p) = planes.iter().find(|p| p.width != pw || p.height != ph) {
        return Err(Error::Size(format!(
            "plane sizes differ: {pw}x{ph} vs {}x{}",
            p.width, p.height
        )));
    }
    let (width, height) = (pw * kx, ph * ky);
    let mut data = vec![T::default(); width * height];
    for i in 0..ky {
        for j in 0..kx {
            let plane = &planes[i * kx + j];
            for y in 0..ph {
                let row = &mut data[(y * ky + i) * width..][..width];
                for x in 0..pw {
                    row[x * kx + j] = plane.data[y * pw + x];
                }
            }
        }
    }
    Ok((width, height, data))
}

pub fn pixel_shuffle(img: &RawImage) -> Result<PlaneStack> {
    let (kx, ky) = (img.pattern.period_x(), img.pattern.period_y());
    let planes = shuffle_planes(&img.data, img.width, img.height, kx, ky)?;
    let labels = (0..ky)
        .flat_map(|i| (0..kx).map(move |j| (i, j)))
        .map(|(i, j)| PlaneLabel {
            channel: img.pattern.at(j, i),
            offset_x: j,
            offset_y: i,
        })
        .collect();
    Ok(PlaneStack { planes, labels })
}

pub fn pixel_unshuffle(stack: &PlaneStack, pattern: &CfaPattern, levels: Levels) -> Result<RawImage> {
    let (width, height, data) =
        unshuffle_planes(&stack.planes, pattern.period_x(), pattern.period_y())?;
    RawImage::new(width, height, levels, pattern.clone(), data)
}

/// Reflect-101 border index: -1 maps to 1, `n` maps to `n - 2`.
#[inline]
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coord_image(w: usize, h: usize, pattern: CfaPattern) -> RawImage {
        // sample value encodes its position
        let data = (0..w * h).map(|i| i as u16).collect();
        let levels = Levels {
            bit_depth: 16,
            black_level: 0,
            white_level: u16::MAX,
        };
        RawImage::new(w, h, levels, pattern, data).unwrap()
    }

    #[test]
    fn rgbw_4x4_gives_16_single_pixel_planes() {
        let img = coord_image(4, 4, CfaPattern::rgbw_diag());
        let stack = pixel_shuffle(&img).unwrap();
        assert_eq!(stack.planes.len(), 16);
        for (k, p) in stack.planes.iter().enumerate() {
            assert_eq!((p.width, p.height), (1, 1));
            assert_eq!(p.data[0] as usize, k);
        }
        assert_eq!(stack.labels[0].channel, Channel::G);
        assert_eq!(stack.labels[1].channel, Channel::W);
    }

    #[test]
    fn constant_image_gives_constant_planes() {
        let img = RawImage::filled(8, 12, Levels::default(), CfaPattern::rgbw_diag(), 321).unwrap();
        let stack = pixel_shuffle(&img).unwrap();
        assert!(stack.planes.iter().all(|p| p.data.iter().all(|&v| v == 321)));
    }

    #[test]
    fn shuffle_position_mapping_is_exhaustive() {
        let (w, h) = (12, 8);
        let img = coord_image(w, h, CfaPattern::rgbw_diag());
        let stack = pixel_shuffle(&img).unwrap();
        let mut seen = vec![false; w * h];
        for (plane, label) in stack.planes.iter().zip(&stack.labels) {
            for y in 0..plane.height {
                for x in 0..plane.width {
                    let (sx, sy) = (x * 4 + label.offset_x, y * 4 + label.offset_y);
                    let v = plane.get(x, y) as usize;
                    assert_eq!(v, sy * w + sx);
                    assert_eq!(label.channel, img.channel_at(sx, sy));
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn unshuffle_hand_placement() {
        let planes = (1..=4u16)
            .map(|v| Plane::new(1, 1, vec![v]).unwrap())
            .collect::<Vec<_>>();
        let stack = PlaneStack {
            planes,
            labels: vec![],
        };
        let img = pixel_unshuffle(&stack, &CfaPattern::bayer_gbrg(), Levels::default()).unwrap();
        assert_eq!(img.data(), &[1, 2, 3, 4]);
        assert_eq!((img.width(), img.height()), (2, 2));
    }

    #[test]
    fn unshuffle_constant_planes_gives_constant_bayer() {
        let planes = vec![Plane::filled(3, 5, 77u16); 4];
        let stack = PlaneStack {
            planes,
            labels: vec![],
        };
        let img = pixel_unshuffle(&stack, &CfaPattern::bayer_gbrg(), Levels::default()).unwrap();
        assert_eq!((img.width(), img.height()), (6, 10));
        assert!(img.data().iter().all(|&v| v == 77));
    }

    #[test]
    fn misaligned_input_rejected() {
        let r = RawImage::new(6, 4, Levels::default(), CfaPattern::rgbw_diag(), vec![0; 24]);
        assert!(matches!(r, Err(Error::Size(_))));
        assert!(shuffle_planes(&[0u16; 24], 6, 4, 4, 4).is_err());
    }

    #[test]
    fn unshuffle_rejects_bad_stacks() {
        let stack = PlaneStack {
            planes: vec![Plane::filled(2, 2, 0u16); 3],
            labels: vec![],
        };
        assert!(pixel_unshuffle(&stack, &CfaPattern::bayer_gbrg(), Levels::default()).is_err());
        let mut planes = vec![Plane::filled(2, 2, 0u16); 4];
        planes[2] = Plane::filled(2, 3, 0);
        let stack = PlaneStack {
            planes,
            labels: vec![],
        };
        assert!(pixel_unshuffle(&stack, &CfaPattern::bayer_gbrg(), Levels::default()).is_err());
    }

    #[test]
    fn levels_validation() {
        let mut l = Levels::default();
        assert!(l.validate().is_ok());
        l.white_level = 1024;
        assert!(l.validate().is_err());
        l = Levels {
            bit_depth: 10,
            black_level: 1023,
            white_level: 1023,
        };
        assert!(l.validate().is_err());
        assert!(RawImage::new(2, 2, Levels::default(), CfaPattern::bayer_gbrg(), vec![0, 0, 0, 1024]).is_err());
    }

    #[test]
    fn mirror_reflects_without_duplicating_edge() {
        assert_eq!(mirror(-1, 5), 1);
        assert_eq!(mirror(-2, 5), 2);
        assert_eq!(mirror(5, 5), 3);
        assert_eq!(mirror(6, 5), 2);
        assert_eq!(mirror(3, 5), 3);
        assert_eq!(mirror(-7, 3), 1);
        assert_eq!(mirror(4, 1), 0);
    }

    proptest! {
        #[test]
        fn shuffle_roundtrip(bw in 1usize..5, bh in 1usize..5, rgbw in any::<bool>(), seed in any::<u64>()) {
            let pattern = if rgbw { CfaPattern::rgbw_diag() } else { CfaPattern::bayer_gbrg() };
            let (w, h) = (bw * pattern.period_x(), bh * pattern.period_y());
            let data = (0..w * h).map(|i| ((i as u64).wrapping_mul(seed | 1) % 1024) as u16).collect();
            let img = RawImage::new(w, h, Levels::default(), pattern.clone(), data).unwrap();
            let back = pixel_unshuffle(&pixel_shuffle(&img).unwrap(), &pattern, img.levels()).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
