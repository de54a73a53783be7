//! Build a small PNG pyramid from the synthetic pattern and check that a
//! full-resolution tile decodes back to the exact source pixels.

use iris_core::container::{open_container, Encoding};
use iris_core::encoder::{build_pyramid, EncodeJob, Source, SyntheticPattern};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let out = dir.path().join("pattern.iris");
    let seed = 42;
    let job = EncodeJob::new(Source::Synthetic { width: 1000, height: 600, seed }, &out)
        .tile_size(256)
        .encoding(Encoding::Png);
    let meta = build_pyramid(&job)?;
    println!("wrote {} layers, {} tiles", meta.layers.len(), meta.tile_count());

    let handle = open_container(&out)?;
    let top = meta.layers.len() as u32 - 1;
    let bytes = handle.read_tile(top, 0)?;
    let tile = image::load_from_memory(&bytes)?.to_rgb8();
    let pattern = SyntheticPattern::new(seed);
    let mismatches = tile
        .enumerate_pixels()
        .filter(|(x, y, p)| p.0 != pattern.pixel(*x, *y))
        .count();
    println!("top-left tile: {mismatches} mismatched pixels");
    Ok(())
}
