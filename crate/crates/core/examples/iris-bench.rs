//! Ramped load test against a running tile server.
//!
//! ```text
//! cargo run --release --example iris-bench -- --url https://127.0.0.1:3000 --slide demo \
//!     --users 220 --ramp 10 --think-min 1 --think-max 2 --duration 60 --csv run.csv
//! ```

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use iris_core::bench::{run_load, LoadProfile};

#[derive(Debug, Parser)]
#[command(name = "iris-bench")]
struct Args {
    /// Server base URL.
    #[arg(long)]
    url: String,
    #[arg(long)]
    slide: String,
    #[arg(long, default_value_t = 50)]
    users: u32,
    /// Users started per second.
    #[arg(long, default_value_t = 10.0)]
    ramp: f64,
    /// Minimum think time, ms.
    #[arg(long, default_value_t = 1)]
    think_min: u64,
    /// Maximum think time, ms.
    #[arg(long, default_value_t = 2)]
    think_max: u64,
    /// Run length, seconds.
    #[arg(long, default_value_t = 30)]
    duration: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-second CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Verify the server certificate instead of accepting any.
    #[arg(long)]
    strict_tls: bool,
}

fn run(args: Args) -> Result<(), String> {
    let mut profile = LoadProfile::new(args.url, args.slide);
    profile.max_users = args.users;
    profile.ramp_rate = args.ramp;
    profile.think_min = Duration::from_millis(args.think_min);
    profile.think_max = Duration::from_millis(args.think_max);
    profile.duration = Duration::from_secs(args.duration);
    profile.seed = args.seed;
    profile.accept_invalid_certs = !args.strict_tls;
    let report = run_load(&profile).map_err(|e| e.to_string())?;
    println!("{report}");
    if let Some(path) = args.csv {
        let out = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        report.write_csv(out).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iris-bench: {e}");
            ExitCode::FAILURE
        }
    }
}
