//! Ramped, seeded load generator for tile servers.
//!
//! Each virtual user fetches the slide metadata once, then loops: pick a
//! layer uniformly, pick a tile uniformly within it, `GET` it, sleep a
//! uniform think time. Samples flow over a channel to a single aggregator
//! that buckets them per second.
//!
//! ```no_run
//! use std::time::Duration;
//! use iris_core::bench::{run_load, LoadProfile};
//!
//! let mut profile = LoadProfile::new("https://127.0.0.1:3000", "demo");
//! profile.max_users = 50;
//! profile.duration = Duration::from_secs(30);
//! let report = run_load(&profile).expect("load run");
//! println!("{report}");
//! ```

mod ramp;
mod sampler;
mod stats;

use std::time::{Duration, Instant, SystemTime};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tokio::sync::mpsc;

use crate::schema::SlideMetadataDoc;

pub use ramp::RampSchedule;
pub use sampler::{TilePick, TileSampler};
pub use stats::{
    percentile, percentile_sorted, Aggregator, Bucket, LoadTestReport, Percentiles, Sample,
    StatsError,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid load profile: {0}")]
    Config(String),
    #[error("target unreachable: {0}")]
    Unreachable(String),
    #[error("bad slide metadata: {0}")]
    Metadata(String),
    #[error("runtime: {0}")]
    Runtime(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct LoadProfile {
    /// Server base URL, e.g. `https://host:3000`.
    pub target_url: String,
    pub slide: String,
    pub max_users: u32,
    /// Users started per second.
    pub ramp_rate: f64,
    pub think_min: Duration,
    pub think_max: Duration,
    /// Wall time of the whole run, ramp included.
    pub duration: Duration,
    pub seed: u64,
    /// Accept self-signed server certificates.
    pub accept_invalid_certs: bool,
    pub request_timeout: Duration,
}

impl LoadProfile {
    pub fn new(target_url: impl Into<String>, slide: impl Into<String>) -> Self {
        LoadProfile {
            target_url: target_url.into(),
            slide: slide.into(),
            max_users: 10,
            ramp_rate: 10.0,
            think_min: Duration::from_millis(1),
            think_max: Duration::from_millis(2),
            duration: Duration::from_secs(10),
            seed: 0,
            accept_invalid_certs: true,
            request_timeout: Duration::from_secs(10),
        }
    }

    pub fn schedule(&self) -> RampSchedule {
        RampSchedule {
            max_users: self.max_users,
            ramp_rate: self.ramp_rate,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.max_users == 0 {
            return bad("max_users must be at least 1");
        }
        if !(self.ramp_rate.is_finite() && self.ramp_rate > 0.0) {
            return bad("ramp rate must be positive");
        }
        if self.think_min > self.think_max {
            return bad("think_min exceeds think_max");
        }
        if self.duration.is_zero() {
            return bad("duration must be positive");
        }
        if self.schedule().ramp_duration() > self.duration {
            return bad("ramp does not complete within the run duration");
        }
        if !(self.target_url.starts_with("http://") || self.target_url.starts_with("https://")) {
            return bad("target url must be http:// or https://");
        }
        crate::naming::SafeSegment::new(&self.slide)
            .map_err(|e| BenchError::Config(format!("slide name: {e}")))?;
        Ok(())
    }

    fn base(&self) -> &str {
        self.target_url.trim_end_matches('/')
    }

    pub fn metadata_url(&self) -> String {
        format!("{}/slides/{}/metadata", self.base(), self.slide)
    }

    pub fn tile_url(&self, pick: &TilePick) -> String {
        format!(
            "{}/slides/{}/layers/{}/tiles/{}",
            self.base(),
            self.slide,
            pick.layer,
            pick.tile
        )
    }

    fn client(&self) -> Result<reqwest::Client, BenchError> {
        reqwest::Client::builder()
            .danger_accept_invalid_certs(self.accept_invalid_certs)
            .timeout(self.request_timeout)
            .pool_max_idle_per_host(1)
            .build()
            .map_err(|e| BenchError::Config(format!("http client: {e}")))
    }
}

/// Runs `profile` on a fresh tokio runtime.
pub fn run_load(profile: &LoadProfile) -> Result<LoadTestReport, BenchError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(run_load_async(profile))
}

async fn fetch_metadata(
    client: &reqwest::Client,
    url: &str,
) -> Result<SlideMetadataDoc, BenchError> {
    let resp = client
        .get(url)
        .send()
        .await
        .map_err(|e| BenchError::Unreachable(format!("{url}: {e}")))?;
    let status = resp.status();
    if !status.is_success() {
        return Err(BenchError::Metadata(format!("{url}: HTTP {status}")));
    }
    let body = resp
        .bytes()
        .await
        .map_err(|e| BenchError::Unreachable(format!("{url}: {e}")))?;
    serde_json::from_slice(&body).map_err(|e| BenchError::Metadata(format!("{url}: {e}")))
}

pub async fn run_load_async(profile: &LoadProfile) -> Result<LoadTestReport, BenchError> {
    profile.validate()?;
    // Fail fast before any user starts.
    let probe = profile.client()?;
    let doc = fetch_metadata(&probe, &profile.metadata_url()).await?;
    TileSampler::from_docs(&doc.layers)
        .ok_or_else(|| BenchError::Metadata("slide has no tiles".into()))?;
    drop(probe);

    let started_wall = SystemTime::now();
    let started = Instant::now();
    let deadline = started + profile.duration;
    let (tx, mut rx) = mpsc::unbounded_channel::<Sample>();
    let schedule = profile.schedule();

    let mut users = Vec::with_capacity(profile.max_users as usize);
    for id in 0..profile.max_users {
        let client = profile.client()?;
        let tx = tx.clone();
        let profile = profile.clone();
        let start_at = started + schedule.start_offset(id);
        users.push(tokio::spawn(async move {
            tokio::time::sleep_until(start_at.into()).await;
            virtual_user(id, client, &profile, started, deadline, tx).await;
        }));
    }
    drop(tx);

    let mut agg = Aggregator::new(started_wall);
    while let Some(sample) = rx.recv().await {
        agg.record(sample);
    }
    for u in users {
        let _ = u.await;
    }
    Ok(agg.finish(profile.duration, profile.target_url.clone()))
}

async fn timed_get(client: &reqwest::Client, url: &str) -> bool {
    match client.get(url).send().await {
        Ok(resp) => {
            let ok = resp.status() == reqwest::StatusCode::OK;
            resp.bytes().await.is_ok() && ok
        }
        Err(_) => false,
    }
}

async fn virtual_user(
    id: u32,
    client: reqwest::Client,
    profile: &LoadProfile,
    started: Instant,
    deadline: Instant,
    tx: mpsc::UnboundedSender<Sample>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed.wrapping_add(id as u64));
    let record = |begin: Instant, ok: bool| {
        let now = Instant::now();
        let _ = tx.send(Sample {
            at: now - started,
            latency_ms: (now - begin).as_secs_f64() * 1e3,
            ok,
        });
    };
    let think = |rng: &mut ChaCha8Rng| {
        let lo = profile.think_min.as_micros() as u64;
        let hi = profile.think_max.as_micros() as u64;
        Duration::from_micros(rng.gen_range(lo..=hi))
    };

    let metadata_url = profile.metadata_url();
    let sampler = loop {
        if Instant::now() >= deadline {
            return;
        }
        let begin = Instant::now();
        match fetch_metadata(&client, &metadata_url).await {
            Ok(doc) => {
                record(begin, true);
                match TileSampler::from_docs(&doc.layers) {
                    Some(s) => break s,
                    None => return,
                }
            }
            Err(_) => {
                record(begin, false);
                tokio::time::sleep(think(&mut rng).max(Duration::from_millis(100))).await;
            }
        }
    };

    while Instant::now() < deadline {
        let pick = sampler.sample(&mut rng);
        let url = profile.tile_url(&pick);
        let begin = Instant::now();
        let ok = timed_get(&client, &url).await;
        record(begin, ok);
        let pause = think(&mut rng);
        if pause.is_zero() {
            tokio::task::yield_now().await;
        } else {
            tokio::time::sleep(pause).await;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut p = LoadProfile::new("http://127.0.0.1:1", "demo");
        assert!(p.validate().is_ok());
        p.max_users = 100;
        p.ramp_rate = 1.0;
        assert!(matches!(p.validate(), Err(BenchError::Config(_))));
        let mut p = LoadProfile::new("ftp://x", "demo");
        assert!(p.validate().is_err());
        p.target_url = "http://x".into();
        p.slide = "../etc".into();
        assert!(p.validate().is_err());
    }

    #[test]
    fn unreachable_target_fails_before_ramp() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        drop(listener);
        let p = LoadProfile::new(format!("http://127.0.0.1:{port}"), "demo");
        let t = Instant::now();
        assert!(matches!(run_load(&p), Err(BenchError::Unreachable(_))));
        assert!(t.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn urls() {
        let p = LoadProfile::new("https://h:3000/", "s1");
        assert_eq!(p.metadata_url(), "https://h:3000/slides/s1/metadata");
        let pick = TilePick { layer: 1, x: 0, y: 0, tile: 7 };
        assert_eq!(p.tile_url(&pick), "https://h:3000/slides/s1/layers/1/tiles/7");
    }
}
