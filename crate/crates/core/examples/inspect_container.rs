//! Print the header and tile table summary of a `.iris` file.
//!
//! ```text
//! cargo run --example inspect_container -- slides/demo.iris
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use iris_core::container::open_container;

fn main() -> ExitCode {
    let Some(path) = std::env::args_os().nth(1).map(PathBuf::from) else {
        eprintln!("usage: inspect_container FILE.iris");
        return ExitCode::FAILURE;
    };
    let handle = match open_container(&path) {
        Ok(h) => h,
        Err(e) => {
            eprintln!("inspect_container: {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    };
    let m = handle.metadata();
    println!("slide     {}", m.slide_name);
    println!("extent    {} x {}", m.extent_x, m.extent_y);
    println!("tiles     {} px {}, {} total", m.tile_size, m.encoding, m.tile_count());
    for (i, layer) in m.layers.iter().enumerate() {
        let sizes: Vec<usize> = (0..layer.tile_count())
            .map(|t| handle.read_tile(i as u32, t as u32).map_or(0, |v| v.len()))
            .collect();
        let total: usize = sizes.iter().sum();
        println!(
            "layer {i:<3} {:>4} x {:<4} scale {:<10} {:>10} bytes, mean tile {} bytes",
            layer.x_tiles,
            layer.y_tiles,
            format!("{}/{}", layer.scale.num(), layer.scale.den()),
            total,
            total / sizes.len().max(1)
        );
    }
    ExitCode::SUCCESS
}
