//! Encode a raster (or a synthetic test pattern) into a `.iris` container.
//!
//! ```text
//! cargo run --release --example iris-encode -- --synth 4096x4096:7 --output demo.iris
//! cargo run --release --example iris-encode -- --source scan.png --encoding png --output scan.iris
//! ```

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use iris_core::container::Encoding;
use iris_core::encoder::{build_pyramid, Downsample, EncodeJob, Source};

#[derive(Debug, Parser)]
#[command(name = "iris-encode")]
struct Args {
    /// Source raster (PNM, PNG or JPEG).
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    source: Option<PathBuf>,
    /// Synthetic source as WxH:SEED.
    #[arg(long)]
    synth: Option<Source>,
    #[arg(long, default_value_t = 256)]
    tile_size: u32,
    /// 2 or 4.
    #[arg(long, default_value_t = 2)]
    downsample: u32,
    #[arg(long, default_value = "jpeg")]
    encoding: Encoding,
    /// JPEG quality, 1-100.
    #[arg(long, default_value_t = 90)]
    quality: u8,
    #[arg(long)]
    output: PathBuf,
}

fn run(args: Args) -> Result<(), String> {
    let source = match (args.source, args.synth) {
        (Some(p), _) => Source::Path(p),
        (None, Some(s)) => s,
        (None, None) => unreachable!("clap requires one source"),
    };
    let downsample = Downsample::try_from(args.downsample)?;
    let job = EncodeJob::new(source, &args.output)
        .tile_size(args.tile_size)
        .downsample(downsample)
        .encoding(args.encoding)
        .jpeg_quality(args.quality);
    let t = Instant::now();
    let meta = build_pyramid(&job).map_err(|e| e.to_string())?;
    println!(
        "{}: {}x{} px, {} layers, {} tiles of {}px {} in {:.2?}",
        args.output.display(),
        meta.extent_x,
        meta.extent_y,
        meta.layers.len(),
        meta.tile_count(),
        meta.tile_size,
        meta.encoding,
        t.elapsed()
    );
    for (i, l) in meta.layers.iter().enumerate() {
        println!("  layer {i}: {}x{} tiles, scale {}", l.x_tiles, l.y_tiles, l.scale.as_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iris-encode: {e}");
            ExitCode::FAILURE
        }
    }
}
