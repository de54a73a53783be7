use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use iris_core::server::{serve, ServerConfig, DEFAULT_PORT};

/// Serve a directory of `.iris` slide containers over HTTP(S).
#[derive(Debug, Parser)]
#[command(name = "iris-restful", version)]
struct Args {
    #[arg(short, long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Directory containing `.iris` files.
    #[arg(short = 'd', long = "dir")]
    dir: PathBuf,
    /// PEM certificate chain. Requires --key.
    #[arg(short, long, requires = "key")]
    cert: Option<PathBuf>,
    /// PEM private key. Requires --cert.
    #[arg(short, long, requires = "cert")]
    key: Option<PathBuf>,
    /// Value for Access-Control-Allow-Origin.
    #[arg(short = 'o', long = "cors", visible_alias = "origin")]
    cors: Option<String>,
    /// Document root served for non-API paths.
    #[arg(short = 'r', long = "root")]
    root: Option<PathBuf>,
    /// Plain HTTP instead of TLS.
    #[arg(long, visible_alias = "no-https")]
    http_only: bool,
    #[arg(long)]
    fs_workers: Option<usize>,
    #[arg(long)]
    net_workers: Option<usize>,
    /// Expose GET /_debug/handles.
    #[arg(long)]
    debug_handles: bool,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .init();
    let args = Args::parse();
    let mut config = ServerConfig::new(args.dir);
    config.port = args.port;
    config.cert_path = args.cert;
    config.key_path = args.key;
    config.cors_origin = args.cors;
    config.doc_root = args.root;
    config.https_enabled = !args.http_only;
    config.debug_handles = args.debug_handles;
    if let Some(n) = args.fs_workers {
        config.fs_workers = n;
    }
    if let Some(n) = args.net_workers {
        config.net_workers = n;
    }
    match serve(config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iris-restful: {e}");
            ExitCode::FAILURE
        }
    }
}
