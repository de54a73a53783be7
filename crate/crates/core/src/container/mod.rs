//! Pyramidal tile container.
//!
//! A container is a single `.iris` file holding every compressed tile of a
//! slide pyramid behind a small binary header and a dense tile table. The
//! byte layout is documented in `docs/FORMAT.md`; [`format`] implements it.
//!
//! ```text
//! magic | version | header_len | tile_count | header | tile table | payload | sha256
//! ```
//!
//! Containers are opened once, validated up front, memory-mapped, and then
//! shared between sessions as a reference-counted [`SlideHandle`]. Tile
//! reads return [`TileView`]s that borrow straight from the mapping.

mod format;
mod handle;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::naming::SlideName;

pub use format::{write_container, CHECKSUM_LEN, FORMAT_VERSION, MAGIC, PREAMBLE_LEN};
pub use handle::{open_container, SlideHandle, TileView};

/// File suffix of slide containers.
pub const CONTAINER_EXTENSION: &str = "iris";

#[derive(Debug, Error)]
pub enum ContainerError {
    /// Wrong magic or unsupported version.
    #[error("not a slide container: {0}")]
    NotAContainer(String),
    /// Checksum, bounds or metadata invariant failure.
    #[error("corrupt container: {0}")]
    Corrupt(String),
    #[error("tile out of range: layer {layer}, tile {tile}")]
    OutOfRange { layer: u32, tile: u32 },
    #[error("invalid slide metadata: {0}")]
    InvalidMetadata(String),
    #[error("expected {expected} tiles, got {actual}")]
    TileCountMismatch { expected: usize, actual: usize },
    #[error("tile {index} does not decode as {encoding}: {reason}")]
    UndecodableTile {
        index: usize,
        encoding: Encoding,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ContainerError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, ContainerError::Io(e) if e.kind() == std::io::ErrorKind::NotFound)
    }
}

/// Tile compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Jpeg,
    Png,
}

impl Encoding {
    pub fn media_type(self) -> &'static str {
        match self {
            Encoding::Jpeg => "image/jpeg",
            Encoding::Png => "image/png",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Encoding::Jpeg => 0,
            Encoding::Png => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Encoding::Jpeg),
            1 => Some(Encoding::Png),
            _ => None,
        }
    }

    pub fn image_format(self) -> image::ImageFormat {
        match self {
            Encoding::Jpeg => image::ImageFormat::Jpeg,
            Encoding::Png => image::ImageFormat::Png,
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Jpeg => "jpeg",
            Encoding::Png => "png",
        })
    }
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jpeg" | "jpg" => Ok(Encoding::Jpeg),
            "png" => Ok(Encoding::Png),
            other => Err(format!("unknown encoding {other:?}")),
        }
    }
}

/// Downsampling factor of a layer relative to the full-resolution layer,
/// kept as a reduced fraction `num / den` with `0 < num <= den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale {
    num: u32,
    den: u32,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Scale {
    pub const ONE: Scale = Scale { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Option<Self> {
        if num == 0 || den == 0 || num > den {
            return None;
        }
        let g = gcd(num as u64, den as u64) as u32;
        Some(Scale {
            num: num / g,
            den: den / g,
        })
    }

    /// `1 / factor^steps`, the scale of a layer `steps` halvings (or
    /// quarterings) below the top.
    pub fn reciprocal_power(factor: u32, steps: u32) -> Option<Self> {
        let den = factor.checked_pow(steps)?;
        Scale::new(1, den)
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ceil(extent * scale)`, the pixel extent of a layer.
    pub fn apply_ceil(self, extent: u32) -> u32 {
        (extent as u64 * self.num as u64).div_ceil(self.den as u64) as u32
    }
}

impl PartialOrd for Scale {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scale {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u64 * other.den as u64).cmp(&(other.num as u64 * self.den as u64))
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Tile grid of one pyramid layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerInfo {
    pub x_tiles: u32,
    pub y_tiles: u32,
    pub scale: Scale,
}

impl LayerInfo {
    /// Grid implied by a slide extent, tile size and scale.
    pub fn for_extent(extent_x: u32, extent_y: u32, tile_size: u32, scale: Scale) -> Self {
        LayerInfo {
            x_tiles: scale.apply_ceil(extent_x).div_ceil(tile_size),
            y_tiles: scale.apply_ceil(extent_y).div_ceil(tile_size),
            scale,
        }
    }

    pub fn tile_count(&self) -> u64 {
        self.x_tiles as u64 * self.y_tiles as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlideMetadata {
    pub slide_name: SlideName,
    pub extent_x: u32,
    pub extent_y: u32,
    pub tile_size: u32,
    pub encoding: Encoding,
    /// Ascending scale: lowest resolution first, full resolution last.
    pub layers: Vec<LayerInfo>,
}

impl SlideMetadata {
    pub fn tile_count(&self) -> u64 {
        self.layers.iter().map(LayerInfo::tile_count).sum()
    }

    pub fn layer(&self, index: u32) -> Option<&LayerInfo> {
        self.layers.get(index as usize)
    }

    /// Pixel extent `(width, height)` of a layer, rounded up.
    pub fn layer_extent(&self, layer: &LayerInfo) -> (u32, u32) {
        (
            layer.scale.apply_ceil(self.extent_x),
            layer.scale.apply_ceil(self.extent_y),
        )
    }

    /// Checks every metadata invariant; the message names the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.extent_x == 0 || self.extent_y == 0 {
            return Err("slide extent must be positive".into());
        }
        if self.tile_size == 0 {
            return Err("tile size must be positive".into());
        }
        let Some(top) = self.layers.last() else {
            return Err("slide has no layers".into());
        };
        if top.scale != Scale::ONE {
            return Err(format!("top layer scale is {}, expected 1", top.scale));
        }
        for pair in self.layers.windows(2) {
            if pair[0].scale >= pair[1].scale {
                return Err(format!(
                    "layer scales not strictly increasing ({} then {})",
                    pair[0].scale, pair[1].scale
                ));
            }
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let expect =
                LayerInfo::for_extent(self.extent_x, self.extent_y, self.tile_size, layer.scale);
            if layer.x_tiles == 0 || layer.y_tiles == 0 {
                return Err(format!("layer {i} has an empty grid"));
            }
            if (expect.x_tiles, expect.y_tiles) != (layer.x_tiles, layer.y_tiles) {
                return Err(format!(
                    "layer {i} grid {}x{} disagrees with extent (expected {}x{})",
                    layer.x_tiles, layer.y_tiles, expect.x_tiles, expect.y_tiles
                ));
            }
        }
        Ok(())
    }
}

/// Slide name for a container path: the file stem, which must be a safe
/// segment and carry the `.iris` suffix.
pub fn slide_name_for_path(path: &Path) -> Result<SlideName, ContainerError> {
    let ext_ok = path.extension().and_then(|e| e.to_str()) == Some(CONTAINER_EXTENSION);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    if !ext_ok {
        return Err(ContainerError::InvalidMetadata(format!(
            "{} does not end in .{CONTAINER_EXTENSION}",
            path.display()
        )));
    }
    SlideName::new(stem).map_err(|e| ContainerError::InvalidMetadata(format!("slide name: {e}")))
}
