//! Box downsampling and tile extraction.

use image::{Rgb, RgbImage};

/// Box-filters by `factor`. The output is `ceil(w/factor) x ceil(h/factor)`;
/// each output pixel is the rounded mean of the in-bounds source pixels of
/// its `factor x factor` block.
pub fn downsample(src: &RgbImage, factor: u32) -> RgbImage {
    let (w, h) = src.dimensions();
    let (ow, oh) = (w.div_ceil(factor), h.div_ceil(factor));
    RgbImage::from_fn(ow, oh, |ox, oy| {
        let mut sum = [0u32; 3];
        let mut n = 0u32;
        for sy in oy * factor..((oy + 1) * factor).min(h) {
            for sx in ox * factor..((ox + 1) * factor).min(w) {
                let p = src.get_pixel(sx, sy).0;
                for c in 0..3 {
                    sum[c] += p[c] as u32;
                }
                n += 1;
            }
        }
        Rgb(sum.map(|s| ((s + n / 2) / n) as u8))
    })
}

/// Cuts tile `(tx, ty)` out of a layer raster, replicating the last
/// row/column into any area beyond the layer edge.
pub fn extract_tile(layer: &RgbImage, tx: u32, ty: u32, tile_size: u32) -> RgbImage {
    let (w, h) = layer.dimensions();
    let (x0, y0) = (tx * tile_size, ty * tile_size);
    RgbImage::from_fn(tile_size, tile_size, |x, y| {
        *layer.get_pixel((x0 + x).min(w - 1), (y0 + y).min(h - 1))
    })
}
