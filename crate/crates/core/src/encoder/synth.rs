//! Deterministic synthetic slides.
//!
//! Channel values are triangle waves over pixel coordinates, offset by
//! seed-derived phases:
//!
//! ```text
//! tri(v) = v mod 510 if < 256, else 510 - (v mod 510)
//! r = tri(3x + p0)   g = tri(2y + p1)   b = tri(x + y + p2)
//! ```
//!
//! where `(p0, p1, p2)` are the low, middle and high 16-bit lanes of
//! `splitmix64(seed)`. The waves are continuous, so lossy encodings stay
//! close to the source, while tiles at different positions differ.

use image::{Rgb, RgbImage};

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tri(v: u64) -> u8 {
    let m = v % 510;
    if m < 256 {
        m as u8
    } else {
        (510 - m) as u8
    }
}

/// The pixel function of a seeded synthetic slide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticPattern {
    phases: [u64; 3],
}

impl SyntheticPattern {
    pub fn new(seed: u64) -> Self {
        let h = splitmix64(seed);
        SyntheticPattern {
            phases: [h & 0xFFFF, (h >> 16) & 0xFFFF, (h >> 32) & 0xFFFF],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let (x, y) = (x as u64, y as u64);
        [
            tri(3 * x + self.phases[0]),
            tri(2 * y + self.phases[1]),
            tri(x + y + self.phases[2]),
        ]
    }
}

/// Renders a `width x height` synthetic raster.
pub fn synth_slide(width: u32, height: u32, seed: u64) -> RgbImage {
    let pattern = SyntheticPattern::new(seed);
    RgbImage::from_fn(width, height, |x, y| Rgb(pattern.pixel(x, y)))
}
