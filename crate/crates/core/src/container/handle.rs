use std::fs::File;
use std::ops::Deref;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use bytes::Bytes;
use memmap2::Mmap;

use super::format::{self, le_u64, Layout, TABLE_ENTRY_LEN};
use super::{slide_name_for_path, ContainerError, SlideMetadata};
use crate::roles;

/// A validated, memory-mapped container shared between client sessions.
///
/// The handle is immutable after [`open_container`] except for its session
/// reference count. Dropping the last `Arc<Mmap>` (held by the handle and by
/// any outstanding [`TileView`]) unmaps the file.
#[derive(Debug)]
pub struct SlideHandle {
    metadata: SlideMetadata,
    mapping: Arc<Mmap>,
    table_start: usize,
    payload_start: usize,
    payload_len: usize,
    layer_base: Vec<u64>,
    refcount: AtomicUsize,
}

/// Opens and validates a container. The returned handle has a reference
/// count of one.
pub fn open_container(path: &Path) -> Result<SlideHandle, ContainerError> {
    roles::assert_fs_allowed("open_container");
    let file = File::open(path)?;
    let meta = file.metadata()?;
    if !meta.is_file() {
        return Err(ContainerError::NotAContainer(format!(
            "{} is not a regular file",
            path.display()
        )));
    }
    let name = slide_name_for_path(path).map_err(|e| ContainerError::NotAContainer(e.to_string()))?;
    if meta.len() == 0 {
        return Err(ContainerError::NotAContainer("empty file".into()));
    }
    // SAFETY: the mapping is read-only. Containers are written to a temporary
    // name and renamed into place, so a served file is never modified in place.
    let mapping = unsafe { Mmap::map(&file)? };
    let Layout {
        metadata,
        table_start,
        payload_start,
        payload_len,
        layer_base,
    } = format::parse(&mapping, name)?;
    Ok(SlideHandle {
        metadata,
        mapping: Arc::new(mapping),
        table_start,
        payload_start,
        payload_len,
        layer_base,
        refcount: AtomicUsize::new(1),
    })
}

impl SlideHandle {
    pub fn metadata(&self) -> &SlideMetadata {
        &self.metadata
    }

    /// Zero-copy view of the stored bytes of one tile.
    pub fn read_tile(&self, layer: u32, tile: u32) -> Result<TileView, ContainerError> {
        roles::assert_fs_allowed("read_tile");
        let out_of_range = ContainerError::OutOfRange { layer, tile };
        let info = self.metadata.layer(layer).ok_or(out_of_range)?;
        if tile as u64 >= info.tile_count() {
            return Err(ContainerError::OutOfRange { layer, tile });
        }
        let entry = self.layer_base[layer as usize] + tile as u64;
        let at = self.table_start + entry as usize * TABLE_ENTRY_LEN;
        let offset = le_u64(&self.mapping, at) as usize;
        let len = le_u64(&self.mapping, at + 8) as usize;
        let start = self.payload_start + offset;
        assert!(
            offset + len <= self.payload_len,
            "tile view escapes payload region"
        );
        Ok(TileView {
            mapping: Arc::clone(&self.mapping),
            start,
            len,
        })
    }

    pub fn refcount(&self) -> usize {
        self.refcount.load(Ordering::Acquire)
    }

    pub fn retain(&self) {
        let prev = self.refcount.fetch_add(1, Ordering::AcqRel);
        debug_assert!(prev >= 1, "retain on a released slide handle");
    }

    /// Drops one reference; returns `true` when this was the last one, at
    /// which point the owner must discard the handle.
    pub fn release(&self) -> bool {
        let prev = self.refcount.fetch_sub(1, Ordering::AcqRel);
        debug_assert!(prev >= 1, "release on a released slide handle");
        prev == 1
    }

    /// Payload bytes as stored, for integrity checks.
    pub fn payload(&self) -> &[u8] {
        &self.mapping[self.payload_start..self.payload_start + self.payload_len]
    }
}

/// Borrowed tile bytes that keep the mapping alive.
#[derive(Debug, Clone)]
pub struct TileView {
    mapping: Arc<Mmap>,
    start: usize,
    len: usize,
}

impl TileView {
    /// Converts into a [`Bytes`] without copying.
    pub fn into_bytes(self) -> Bytes {
        Bytes::from_owner(self)
    }
}

impl Deref for TileView {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.mapping[self.start..self.start + self.len]
    }
}

impl AsRef<[u8]> for TileView {
    fn as_ref(&self) -> &[u8] {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::container::{write_container, Encoding, LayerInfo, Scale, SlideMetadata};
    use crate::naming::SafeSegment;

    fn png_tile(shade: u8) -> Vec<u8> {
        let img = image::RgbImage::from_pixel(4, 4, image::Rgb([shade, 0, 255 - shade]));
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png).unwrap();
        out.into_inner()
    }

    fn fixture(dir: &Path) -> std::path::PathBuf {
        let meta = SlideMetadata {
            slide_name: SafeSegment::new("tiny").unwrap(),
            extent_x: 8,
            extent_y: 4,
            tile_size: 4,
            encoding: Encoding::Png,
            layers: vec![
                LayerInfo { x_tiles: 1, y_tiles: 1, scale: Scale::new(1, 2).unwrap() },
                LayerInfo { x_tiles: 2, y_tiles: 1, scale: Scale::ONE },
            ],
        };
        let tiles: Vec<Vec<u8>> = (0..3).map(|i| png_tile(i * 50)).collect();
        let path = dir.join("tiny.iris");
        write_container(&meta, &tiles, &path).unwrap();
        path
    }

    #[test]
    fn reads_tiles_by_layer() {
        let dir = tempfile::tempdir().unwrap();
        let h = open_container(&fixture(dir.path())).unwrap();
        assert_eq!(h.refcount(), 1);
        assert_eq!(h.metadata().tile_count(), 3);
        assert_eq!(&*h.read_tile(1, 1).unwrap(), png_tile(100).as_slice());
        assert!(matches!(h.read_tile(0, 1), Err(ContainerError::OutOfRange { .. })));
        assert!(matches!(h.read_tile(2, 0), Err(ContainerError::OutOfRange { .. })));
        let bytes = h.read_tile(0, 0).unwrap().into_bytes();
        assert_eq!(&bytes[..], png_tile(0).as_slice());
    }

    #[test]
    fn refcounting() {
        let dir = tempfile::tempdir().unwrap();
        let h = open_container(&fixture(dir.path())).unwrap();
        h.retain();
        assert!(!h.release());
        assert!(h.release());
    }

    #[test]
    fn flags_non_containers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.iris");
        std::fs::write(&p, b"definitely not a slide").unwrap();
        assert!(matches!(open_container(&p), Err(ContainerError::NotAContainer(_))));
        let missing = open_container(&dir.path().join("nope.iris")).unwrap_err();
        assert!(missing.is_not_found());
    }
}
