//! Raster-order tile indexing within a layer: `t = y * x_tiles + x`.

use thiserror::Error;

use crate::container::LayerInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("tile ({x}, {y}) outside {x_tiles}x{y_tiles} grid")]
    OutOfGrid { x: u32, y: u32, x_tiles: u32, y_tiles: u32 },
    #[error("tile index {0} outside grid")]
    IndexOutOfGrid(u64),
}

pub fn tile_index(x: u32, y: u32, layer: &LayerInfo) -> Result<u32, GridError> {
    if x >= layer.x_tiles || y >= layer.y_tiles {
        return Err(GridError::OutOfGrid {
            x,
            y,
            x_tiles: layer.x_tiles,
            y_tiles: layer.y_tiles,
        });
    }
    u32::try_from(y as u64 * layer.x_tiles as u64 + x as u64)
        .map_err(|_| GridError::IndexOutOfGrid(y as u64 * layer.x_tiles as u64 + x as u64))
}

/// Inverse of [`tile_index`].
pub fn tile_coords(index: u32, layer: &LayerInfo) -> Result<(u32, u32), GridError> {
    if index as u64 >= layer.tile_count() {
        return Err(GridError::IndexOutOfGrid(index as u64));
    }
    Ok((index % layer.x_tiles, index / layer.x_tiles))
}
