//! Byte layout of `.iris` containers (all integers little-endian).
//!
//! ```text
//! off  len   field
//! 0    8     magic "IRISTILE"
//! 8    2     version (1)
//! 10   2     reserved, zero
//! 12   4     header_len
//! 16   8     tile_count
//! 24   H     header
//! 24+H 16*N  tile table: (offset u64, length u64), offset relative to payload
//! P    ...   payload
//! end-32 32  SHA-256 of bytes [0, P)
//! ```
//!
//! Header: `extent_x u32, extent_y u32, tile_size u32, encoding u8,
//! reserved u8, layer_count u16`, then per layer `x_tiles u32, y_tiles u32,
//! scale_num u32, scale_den u32`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{slide_name_for_path, ContainerError, Encoding, LayerInfo, Scale, SlideMetadata};
use crate::naming::SlideName;

pub const MAGIC: [u8; 8] = *b"IRISTILE";
pub const FORMAT_VERSION: u16 = 1;
/// Fixed bytes before the header.
pub const PREAMBLE_LEN: usize = 24;
pub const CHECKSUM_LEN: usize = 32;
const HEADER_FIXED_LEN: usize = 16;
const LAYER_RECORD_LEN: usize = 16;
pub(crate) const TABLE_ENTRY_LEN: usize = 16;

fn encode_header(meta: &SlideMetadata) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_FIXED_LEN + LAYER_RECORD_LEN * meta.layers.len());
    out.extend_from_slice(&meta.extent_x.to_le_bytes());
    out.extend_from_slice(&meta.extent_y.to_le_bytes());
    out.extend_from_slice(&meta.tile_size.to_le_bytes());
    out.push(meta.encoding.code());
    out.push(0);
    out.extend_from_slice(&(meta.layers.len() as u16).to_le_bytes());
    for layer in &meta.layers {
        out.extend_from_slice(&layer.x_tiles.to_le_bytes());
        out.extend_from_slice(&layer.y_tiles.to_le_bytes());
        out.extend_from_slice(&layer.scale.num().to_le_bytes());
        out.extend_from_slice(&layer.scale.den().to_le_bytes());
    }
    out
}

fn check_tile_decodes(index: usize, bytes: &[u8], meta: &SlideMetadata) -> Result<(), ContainerError> {
    let undecodable = |reason: String| ContainerError::UndecodableTile {
        index,
        encoding: meta.encoding,
        reason,
    };
    let img = image::load_from_memory_with_format(bytes, meta.encoding.image_format())
        .map_err(|e| undecodable(e.to_string()))?;
    if img.width() != meta.tile_size || img.height() != meta.tile_size {
        return Err(undecodable(format!(
            "decoded to {}x{}, expected {}x{}",
            img.width(),
            img.height(),
            meta.tile_size,
            meta.tile_size
        )));
    }
    Ok(())
}

/// Writes a container holding `tiles` in (layer, raster index) order.
///
/// The file stem of `path` must equal `metadata.slide_name`. Every tile is
/// decoded once to confirm it matches the declared encoding and tile size.
pub fn write_container<T: AsRef<[u8]>>(
    metadata: &SlideMetadata,
    tiles: &[T],
    path: &Path,
) -> Result<(), ContainerError> {
    metadata.validate().map_err(ContainerError::InvalidMetadata)?;
    let stem = slide_name_for_path(path)?;
    if stem != metadata.slide_name {
        return Err(ContainerError::InvalidMetadata(format!(
            "file stem {stem} does not match slide name {}",
            metadata.slide_name
        )));
    }
    let expected = metadata.tile_count() as usize;
    if tiles.len() != expected {
        return Err(ContainerError::TileCountMismatch {
            expected,
            actual: tiles.len(),
        });
    }
    for (i, tile) in tiles.iter().enumerate() {
        check_tile_decodes(i, tile.as_ref(), metadata)?;
    }

    let header = encode_header(metadata);
    let mut prefix = Vec::with_capacity(PREAMBLE_LEN + header.len() + TABLE_ENTRY_LEN * tiles.len());
    prefix.extend_from_slice(&MAGIC);
    prefix.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    prefix.extend_from_slice(&0u16.to_le_bytes());
    prefix.extend_from_slice(&(header.len() as u32).to_le_bytes());
    prefix.extend_from_slice(&(tiles.len() as u64).to_le_bytes());
    prefix.extend_from_slice(&header);
    let mut offset = 0u64;
    for tile in tiles {
        let len = tile.as_ref().len() as u64;
        prefix.extend_from_slice(&offset.to_le_bytes());
        prefix.extend_from_slice(&len.to_le_bytes());
        offset += len;
    }
    let digest = Sha256::digest(&prefix);

    let tmp = path.with_extension("iris.partial");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        out.write_all(&prefix)?;
        for tile in tiles {
            out.write_all(tile.as_ref())?;
        }
        out.write_all(&digest)?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Validated layout of a mapped container.
#[derive(Debug)]
pub(crate) struct Layout {
    pub metadata: SlideMetadata,
    pub table_start: usize,
    pub payload_start: usize,
    pub payload_len: usize,
    /// Index of the first table entry of each layer.
    pub layer_base: Vec<u64>,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(b[at..at + 2].try_into().unwrap())
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub(crate) fn le_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn corrupt(msg: impl Into<String>) -> ContainerError {
    ContainerError::Corrupt(msg.into())
}

/// Validates magic, version, checksum, metadata invariants and every tile
/// table entry. Cost is proportional to the header and table, not the payload.
pub(crate) fn parse(bytes: &[u8], slide_name: SlideName) -> Result<Layout, ContainerError> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::NotAContainer("bad magic".into()));
    }
    if bytes.len() < PREAMBLE_LEN + CHECKSUM_LEN {
        return Err(corrupt("truncated preamble"));
    }
    let version = le_u16(bytes, 8);
    if version != FORMAT_VERSION {
        return Err(ContainerError::NotAContainer(format!("unsupported version {version}")));
    }
    if le_u16(bytes, 10) != 0 {
        return Err(corrupt("reserved preamble bytes set"));
    }
    let header_len = le_u32(bytes, 12) as usize;
    let tile_count = le_u64(bytes, 16);

    let available = (bytes.len() - PREAMBLE_LEN - CHECKSUM_LEN) as u64;
    let table_len = tile_count
        .checked_mul(TABLE_ENTRY_LEN as u64)
        .filter(|t| t.checked_add(header_len as u64).is_some_and(|n| n <= available))
        .ok_or_else(|| corrupt("header and tile table exceed file size"))? as usize;

    let table_start = PREAMBLE_LEN + header_len;
    let payload_start = table_start + table_len;
    let checksum_at = bytes.len() - CHECKSUM_LEN;
    let digest = Sha256::digest(&bytes[..payload_start]);
    if digest.as_slice() != &bytes[checksum_at..] {
        return Err(corrupt("checksum mismatch"));
    }

    let header = &bytes[PREAMBLE_LEN..table_start];
    if header.len() < HEADER_FIXED_LEN {
        return Err(corrupt("header too short"));
    }
    let encoding = Encoding::from_code(header[12])
        .ok_or_else(|| corrupt(format!("unknown encoding code {}", header[12])))?;
    if header[13] != 0 {
        return Err(corrupt("reserved header byte set"));
    }
    let layer_count = le_u16(header, 14) as usize;
    if header.len() != HEADER_FIXED_LEN + LAYER_RECORD_LEN * layer_count {
        return Err(corrupt("header length disagrees with layer count"));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for i in 0..layer_count {
        let at = HEADER_FIXED_LEN + LAYER_RECORD_LEN * i;
        let scale = Scale::new(le_u32(header, at + 8), le_u32(header, at + 12))
            .ok_or_else(|| corrupt(format!("layer {i} has an invalid scale")))?;
        layers.push(LayerInfo {
            x_tiles: le_u32(header, at),
            y_tiles: le_u32(header, at + 4),
            scale,
        });
    }
    let metadata = SlideMetadata {
        slide_name,
        extent_x: le_u32(header, 0),
        extent_y: le_u32(header, 4),
        tile_size: le_u32(header, 8),
        encoding,
        layers,
    };
    metadata.validate().map_err(ContainerError::Corrupt)?;
    if metadata.tile_count() != tile_count {
        return Err(corrupt(format!(
            "tile table has {tile_count} entries, layers imply {}",
            metadata.tile_count()
        )));
    }

    let payload_len = checksum_at - payload_start;
    for i in 0..tile_count as usize {
        let at = table_start + i * TABLE_ENTRY_LEN;
        let (off, len) = (le_u64(bytes, at), le_u64(bytes, at + 8));
        if off.checked_add(len).is_none_or(|end| end > payload_len as u64) {
            return Err(corrupt(format!("tile table entry {i} lies outside the payload")));
        }
    }

    let mut layer_base = Vec::with_capacity(metadata.layers.len());
    let mut base = 0;
    for layer in &metadata.layers {
        layer_base.push(base);
        base += layer.tile_count();
    }

    Ok(Layout {
        metadata,
        table_start,
        payload_start,
        payload_len,
        layer_base,
    })
}
