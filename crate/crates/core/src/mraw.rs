//! The MRAW1 raw container, used for both `.rgbw` inputs and `.bayer` outputs.
//!
//! Layout (all integers little-endian):
//!
//! | bytes  | field                                  |
//! |--------|----------------------------------------|
//! | 0..8   | magic `MIPIRAW1`                       |
//! | 8..12  | width (u32)                            |
//! | 12..16 | height (u32)                           |
//! | 16..18 | bit depth (u16)                        |
//! | 18..20 | black level (u16)                      |
//! | 20..22 | white level (u16)                      |
//! | 22     | pattern id (0 GBRG, 1 RGBW main, 2 RGBW anti) |
//! | 23     | reserved, 0                            |
//! | 24..   | width × height u16 samples, row-major  |

use std::fs;
use std::path::Path;

use crate::cfa::{CfaPattern, DiagonalConvention};
use crate::error::{Error, Result};
use crate::raw::{Levels, RawImage};

pub const MAGIC: &[u8; 8] = b"MIPIRAW1";
pub const HEADER_LEN: usize = 24;

pub fn pattern_id(pattern: &CfaPattern) -> Option<u8> {
    if pattern.is_bayer_gbrg() {
        return Some(0);
    }
    match pattern.rgbw_convention()? {
        DiagonalConvention::MainColor => Some(1),
        DiagonalConvention::AntiColor => Some(2),
    }
}

pub fn pattern_from_id(id: u8) -> Option<CfaPattern> {
    match id {
        0 => Some(CfaPattern::bayer_gbrg()),
        1 => Some(CfaPattern::rgbw(DiagonalConvention::MainColor)),
        2 => Some(CfaPattern::rgbw(DiagonalConvention::AntiColor)),
        _ => None,
    }
}

pub fn encode(img: &RawImage) -> Result<Vec<u8>> {
    let id = pattern_id(img.pattern()).ok_or_else(|| {
        Error::Pattern(format!(
            "pattern {} has no MRAW1 id",
            img.pattern().name()
        ))
    })?;
    let levels = img.levels();
    let mut out = Vec::with_capacity(HEADER_LEN + img.data().len() * 2);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&levels.bit_depth.to_le_bytes());
    out.extend_from_slice(&levels.black_level.to_le_bytes());
    out.extend_from_slice(&levels.white_level.to_le_bytes());
    out.push(id);
    out.push(0);
    for &v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses an MRAW1 byte buffer. `origin` only labels error messages.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<RawImage> {
    let bad = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!(
            "truncated header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
    let width = u32_at(8) as usize;
    let height = u32_at(12) as usize;
    let levels = Levels {
        bit_depth: u16_at(16),
        black_level: u16_at(18),
        white_level: u16_at(20),
    };
    let pattern = pattern_from_id(bytes[22])
        .ok_or_else(|| bad(format!("unknown pattern id {}", bytes[22])))?;
    if bytes[23] != 0 {
        return Err(bad(format!("reserved byte is {}, expected 0", bytes[23])));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(2))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| bad(format!("implausible size {width}x{height}")))?;
    if bytes.len() != expected {
        return Err(bad(format!(
            "expected {expected} bytes for {width}x{height}, found {}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    RawImage::new(width, height, levels, pattern, data).map_err(|e| bad(e.to_string()))
}

pub fn read(path: impl AsRef<Path>) -> Result<RawImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn write(path: impl AsRef<Path>, img: &RawImage) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
