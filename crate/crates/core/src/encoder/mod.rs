//! Pyramid encoder.
//!
//! The top layer tiles the source at full resolution. Each lower layer is
//! the next finer layer box-filtered by the downsample factor, and the
//! pyramid stops at the first layer that fits in one tile. Tiles are always
//! `tile_size` square: content past a layer edge replicates the last
//! row/column (see [`resample::extract_tile`]).

pub mod resample;
mod synth;

use std::io::Cursor;
use std::path::PathBuf;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, RgbImage};
use rayon::prelude::*;
use thiserror::Error;

use crate::container::{
    slide_name_for_path, write_container, ContainerError, Encoding, LayerInfo, Scale,
    SlideMetadata,
};

pub use synth::{synth_slide, SyntheticPattern};

pub const DEFAULT_TILE_SIZE: u32 = 256;
pub const DEFAULT_JPEG_QUALITY: u8 = 90;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("cannot read source image: {0}")]
    Source(#[from] image::ImageError),
    #[error("source image has zero extent")]
    ZeroExtent,
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("tile encoding failed: {0}")]
    Encode(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// Any raster the `image` crate reads (PNM, PNG, JPEG).
    Path(PathBuf),
    Synthetic { width: u32, height: u32, seed: u64 },
}

impl std::str::FromStr for Source {
    type Err = String;

    /// Parses the `WxH:SEED` synthetic form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected WxH:SEED, got {s:?}");
        let (dims, seed) = s.split_once(':').ok_or_else(bad)?;
        let (w, h) = dims.split_once('x').ok_or_else(bad)?;
        Ok(Source::Synthetic {
            width: w.parse().map_err(|_| bad())?,
            height: h.parse().map_err(|_| bad())?,
            seed: seed.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Downsample {
    X2,
    X4,
}

impl Downsample {
    pub fn factor(self) -> u32 {
        match self {
            Downsample::X2 => 2,
            Downsample::X4 => 4,
        }
    }
}

impl TryFrom<u32> for Downsample {
    type Error = String;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            2 => Ok(Downsample::X2),
            4 => Ok(Downsample::X4),
            other => Err(format!("downsample must be 2 or 4, got {other}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EncodeJob {
    pub source: Source,
    pub tile_size: u32,
    pub downsample: Downsample,
    pub encoding: Encoding,
    pub jpeg_quality: u8,
    pub output: PathBuf,
}

impl EncodeJob {
    pub fn new(source: Source, output: impl Into<PathBuf>) -> Self {
        EncodeJob {
            source,
            tile_size: DEFAULT_TILE_SIZE,
            downsample: Downsample::X2,
            encoding: Encoding::Jpeg,
            jpeg_quality: DEFAULT_JPEG_QUALITY,
            output: output.into(),
        }
    }

    pub fn encoding(mut self, encoding: Encoding) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn tile_size(mut self, tile_size: u32) -> Self {
        self.tile_size = tile_size;
        self
    }

    pub fn downsample(mut self, downsample: Downsample) -> Self {
        self.downsample = downsample;
        self
    }

    pub fn jpeg_quality(mut self, quality: u8) -> Self {
        self.jpeg_quality = quality;
        self
    }
}

/// Layer grids for a slide, lowest resolution first, without touching pixels.
pub fn pyramid_layout(extent_x: u32, extent_y: u32, tile_size: u32, factor: u32) -> Vec<LayerInfo> {
    let mut layers = Vec::new();
    let mut steps = 0;
    loop {
        let scale = Scale::reciprocal_power(factor, steps).expect("pyramid depth overflow");
        let layer = LayerInfo::for_extent(extent_x, extent_y, tile_size, scale);
        layers.push(layer);
        if layer.x_tiles == 1 && layer.y_tiles == 1 {
            break;
        }
        steps += 1;
    }
    layers.reverse();
    layers
}

fn encode_tile(tile: &RgbImage, encoding: Encoding, quality: u8) -> Result<Vec<u8>, EncodeError> {
    let mut out = Cursor::new(Vec::new());
    let (w, h) = tile.dimensions();
    let res = match encoding {
        Encoding::Png => PngEncoder::new(&mut out).write_image(tile.as_raw(), w, h, ExtendedColorType::Rgb8),
        Encoding::Jpeg => JpegEncoder::new_with_quality(&mut out, quality).write_image(
            tile.as_raw(),
            w,
            h,
            ExtendedColorType::Rgb8,
        ),
    };
    res.map_err(|e| EncodeError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Encodes every tile of `layer` in raster order.
fn encode_layer(layer: &RgbImage, job: &EncodeJob) -> Result<Vec<Vec<u8>>, EncodeError> {
    let x_tiles = layer.width().div_ceil(job.tile_size);
    let y_tiles = layer.height().div_ceil(job.tile_size);
    (0..x_tiles * y_tiles)
        .into_par_iter()
        .map(|t| {
            let tile = resample::extract_tile(layer, t % x_tiles, t / x_tiles, job.tile_size);
            encode_tile(&tile, job.encoding, job.jpeg_quality)
        })
        .collect()
}

fn load_source(source: &Source) -> Result<RgbImage, EncodeError> {
    match source {
        Source::Path(path) => Ok(image::open(path)?.to_rgb8()),
        Source::Synthetic { width, height, seed } => {
            if *width == 0 || *height == 0 {
                return Err(EncodeError::ZeroExtent);
            }
            Ok(synth_slide(*width, *height, *seed))
        }
    }
}

/// Builds the full-resolution-last list of layer rasters.
pub fn layer_rasters(top: RgbImage, tile_size: u32, factor: u32) -> Vec<RgbImage> {
    let mut rasters = vec![top];
    loop {
        let last = rasters.last().unwrap();
        if last.width() <= tile_size && last.height() <= tile_size {
            break;
        }
        let next = resample::downsample(last, factor);
        rasters.push(next);
    }
    rasters.reverse();
    rasters
}

/// Encodes `job.source` into a container at `job.output`.
pub fn build_pyramid(job: &EncodeJob) -> Result<SlideMetadata, EncodeError> {
    if job.tile_size == 0 {
        return Err(EncodeError::InvalidJob("tile size must be positive".into()));
    }
    if job.encoding == Encoding::Jpeg && !(1..=100).contains(&job.jpeg_quality) {
        return Err(EncodeError::InvalidJob("jpeg quality must be 1-100".into()));
    }
    let slide_name = slide_name_for_path(&job.output)
        .map_err(|e| EncodeError::InvalidJob(e.to_string()))?;
    let top = load_source(&job.source)?;
    let (extent_x, extent_y) = top.dimensions();
    if extent_x == 0 || extent_y == 0 {
        return Err(EncodeError::ZeroExtent);
    }
    let factor = job.downsample.factor();
    let rasters = layer_rasters(top, job.tile_size, factor);
    let layers = pyramid_layout(extent_x, extent_y, job.tile_size, factor);
    debug_assert_eq!(layers.len(), rasters.len());

    let mut tiles = Vec::with_capacity(layers.iter().map(|l| l.tile_count() as usize).sum());
    for raster in &rasters {
        tiles.extend(encode_layer(raster, job)?);
    }
    let metadata = SlideMetadata {
        slide_name,
        extent_x,
        extent_y,
        tile_size: job.tile_size,
        encoding: job.encoding,
        layers,
    };
    write_container(&metadata, &tiles, &job.output)?;
    Ok(metadata)
}
