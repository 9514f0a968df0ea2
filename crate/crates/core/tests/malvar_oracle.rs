//! Malvar demosaic against a direct floating-point 5×5 convolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgbwkit_core::demosaic::malvar;
use rgbwkit_core::{CfaPattern, Channel, Levels, RawImage};

type Kernel = [[f64; 5]; 5];

const G_AT_RB: Kernel = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [-1.0, 2.0, 4.0, 2.0, -1.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];
// Color at a green site whose same-row neighbors carry that color.
const ROW_NEIGHBOR: Kernel = [
    [0.0, 0.0, 0.5, 0.0, 0.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [-1.0, 4.0, 5.0, 4.0, -1.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0],
];
const OPPOSITE: Kernel = [
    [0.0, 0.0, -1.5, 0.0, 0.0],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [-1.5, 0.0, 6.0, 0.0, -1.5],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, -1.5, 0.0, 0.0],
];

fn transpose(k: &Kernel) -> Kernel {
    let mut t = [[0.0; 5]; 5];
    for (i, row) in k.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

fn convolve(img: &RawImage, k: &Kernel, x: usize, y: usize) -> f64 {
    let mut acc = 0.0;
    for (dy, row) in k.iter().enumerate() {
        for (dx, w) in row.iter().enumerate() {
            acc += w * f64::from(img.get(x + dx - 2, y + dy - 2));
        }
    }
    acc / 8.0
}

/// Picks the kernel from the local neighborhood, not from a phase table.
fn oracle(img: &RawImage, x: usize, y: usize, want: Channel) -> f64 {
    let here = img.channel_at(x, y);
    let dn = if here == want {
        f64::from(img.get(x, y))
    } else if want == Channel::G {
        convolve(img, &G_AT_RB, x, y)
    } else if here == Channel::G {
        if img.channel_at(x + 1, y) == want {
            convolve(img, &ROW_NEIGHBOR, x, y)
        } else {
            convolve(img, &transpose(&ROW_NEIGHBOR), x, y)
        }
    } else {
        convolve(img, &OPPOSITE, x, y)
    };
    let l = img.levels();
    ((dn - f64::from(l.black_level)) / l.range()).clamp(0.0, 1.0)
}

#[test]
fn matches_direct_convolution_at_random_interior_pixels() {
    let (w, h) = (256, 192);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let levels = Levels { bit_depth: 10, black_level: 64, white_level: 1023 };
    let data = (0..w * h).map(|_| rng.random_range(0..=1023u16)).collect();
    let img = RawImage::new(w, h, levels, CfaPattern::bayer_gbrg(), data).unwrap();
    let rgb = malvar(&img).unwrap();
    for _ in 0..20_000 {
        let x = rng.random_range(2..w - 2);
        let y = rng.random_range(2..h - 2);
        let got = rgb.get(x, y);
        for (c, ch) in [Channel::R, Channel::G, Channel::B].into_iter().enumerate() {
            let want = oracle(&img, x, y, ch);
            assert!(
                (f64::from(got[c]) - want).abs() < 1e-6,
                "({x},{y}) {ch}: {} vs {want}",
                got[c]
            );
        }
    }
}

#[test]
fn gray_ramp_stays_gray() {
    let (w, h) = (64, 48);
    let data = (0..w * h).map(|i| (8 * (i % w) + 4 * (i / w)) as u16).collect();
    let img = RawImage::new(w, h, Levels::default(), CfaPattern::bayer_gbrg(), data).unwrap();
    let rgb = malvar(&img).unwrap();
    for y in 2..h - 2 {
        for x in 2..w - 2 {
            let [r, g, b] = rgb.get(x, y);
            let expect = f64::from(img.get(x, y)) / 1023.0;
            for v in [r, g, b] {
                assert!((f64::from(v) - expect).abs() <= 1.0 / 255.0, "({x},{y})");
            }
        }
    }
}
