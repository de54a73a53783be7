//! Serve a slide directory over plain HTTP on loopback. With no argument a
//! temporary directory holding one synthetic slide is used.
//!
//! ```text
//! cargo run --release --example serve_directory -- slides/
//! curl http://127.0.0.1:PORT/slides/demo/metadata
//! ```

use std::path::PathBuf;

use iris_core::encoder::{build_pyramid, EncodeJob, Source};
use iris_core::server::{Server, ServerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt().init();
    let _tmp;
    let dir = match std::env::args_os().nth(1) {
        Some(d) => PathBuf::from(d),
        None => {
            _tmp = tempfile::tempdir()?;
            let job = EncodeJob::new(
                Source::Synthetic { width: 2048, height: 1536, seed: 1 },
                _tmp.path().join("demo.iris"),
            );
            build_pyramid(&job)?;
            _tmp.path().to_path_buf()
        }
    };
    let mut config = ServerConfig::local(dir);
    config.port = 3000;
    let server = Server::start(config)?;
    println!("serving on {}", server.base_url());
    println!("  {}/slides/demo/metadata", server.base_url());
    println!("  {}/slides/demo/layers/0/tiles/0", server.base_url());
    server.run_until_ctrl_c()?;
    Ok(())
}
