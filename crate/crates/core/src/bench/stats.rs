//! Latency aggregation.
//!
//! Percentiles use the nearest-rank definition: for `n` samples sorted
//! ascending, the `q` percentile is the sample at 1-based rank `ceil(q * n)`.

use std::fmt;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("percentile of an empty sample set")]
    Empty,
    #[error("percentile fraction {0} outside (0, 1)")]
    BadFraction(String),
}

/// Nearest-rank rank for `q` over `n` samples; products within 1e-9 of an
/// integer are treated as that integer so `0.95 * 100` is rank 95.
fn nearest_rank(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let r = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (r as usize).clamp(1, n)
}

pub fn percentile(samples: &[f64], q: f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

/// As [`percentile`], for samples already sorted ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Result<f64, StatsError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(StatsError::BadFraction(q.to_string()));
    }
    if sorted.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(sorted[nearest_rank(q, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Percentiles {
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Percentiles {
    /// `None` for an empty set.
    pub fn of(samples: &[f64]) -> Option<Self> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Percentiles {
            p50: percentile_sorted(&sorted, 0.50).ok()?,
            p75: percentile_sorted(&sorted, 0.75).ok()?,
            p95: percentile_sorted(&sorted, 0.95).ok()?,
        })
    }
}

/// One completed request as seen by a virtual user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Completion time relative to the start of the run.
    pub at: Duration,
    pub latency_ms: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    /// Seconds since the start of the run.
    pub second: u64,
    /// Unix time of the bucket start, in seconds.
    pub timestamp: u64,
    pub requests: u64,
    pub failures: u64,
    pub percentiles: Option<Percentiles>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadTestReport {
    pub buckets: Vec<Bucket>,
    pub total_requests: u64,
    pub total_failures: u64,
    pub duration: Duration,
    pub avg_rps: f64,
    pub max_rps: f64,
    pub percentiles: Option<Percentiles>,
    pub min_latency_ms: Option<f64>,
    pub max_latency_ms: Option<f64>,
    /// Label printed in the summary table.
    pub label: String,
}

/// Collects samples into 1-second buckets.
#[derive(Debug)]
pub struct Aggregator {
    started: SystemTime,
    buckets: Vec<(u64, u64, Vec<f64>)>,
}

impl Aggregator {
    pub fn new(started: SystemTime) -> Self {
        Aggregator {
            started,
            buckets: Vec::new(),
        }
    }

    pub fn record(&mut self, sample: Sample) {
        let idx = sample.at.as_secs() as usize;
        if self.buckets.len() <= idx {
            self.buckets.resize_with(idx + 1, || (0, 0, Vec::new()));
        }
        let b = &mut self.buckets[idx];
        b.0 += 1;
        if !sample.ok {
            b.1 += 1;
        }
        b.2.push(sample.latency_ms);
    }

    pub fn recorded(&self) -> u64 {
        self.buckets.iter().map(|b| b.0).sum()
    }

    pub fn finish(self, duration: Duration, label: impl Into<String>) -> LoadTestReport {
        let start_unix = self
            .started
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let mut all = Vec::new();
        let mut buckets = Vec::with_capacity(self.buckets.len());
        for (i, (requests, failures, latencies)) in self.buckets.into_iter().enumerate() {
            buckets.push(Bucket {
                second: i as u64,
                timestamp: start_unix + i as u64,
                requests,
                failures,
                percentiles: Percentiles::of(&latencies),
            });
            all.extend(latencies);
        }
        let total_requests: u64 = buckets.iter().map(|b| b.requests).sum();
        let total_failures = buckets.iter().map(|b| b.failures).sum();
        let secs = duration.as_secs_f64().max(f64::EPSILON);
        LoadTestReport {
            total_requests,
            total_failures,
            duration,
            avg_rps: total_requests as f64 / secs,
            max_rps: buckets.iter().map(|b| b.requests).max().unwrap_or(0) as f64,
            percentiles: Percentiles::of(&all),
            min_latency_ms: all.iter().copied().min_by(f64::total_cmp),
            max_latency_ms: all.iter().copied().max_by(f64::total_cmp),
            buckets,
            label: label.into(),
        }
    }
}

impl LoadTestReport {
    /// Per-bucket CSV: `timestamp,requests,failures,p50,p75,p95`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "requests", "failures", "p50", "p75", "p95"])?;
        for b in &self.buckets {
            let p = |f: fn(&Percentiles) -> f64| {
                b.percentiles.as_ref().map(|x| format!("{:.3}", f(x))).unwrap_or_default()
            };
            w.write_record([
                b.timestamp.to_string(),
                b.requests.to_string(),
                b.failures.to_string(),
                p(|x| x.p50),
                p(|x| x.p75),
                p(|x| x.p95),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for LoadTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1} ms"));
        writeln!(
            f,
            "{:<28} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "server", "avg req/s", "max req/s", "50%", "75%", "95%"
        )?;
        writeln!(
            f,
            "{:<28} {:>10.0} {:>10.0} {:>10} {:>10} {:>10}",
            self.label,
            self.avg_rps,
            self.max_rps,
            ms(self.percentiles.map(|p| p.p50)),
            ms(self.percentiles.map(|p| p.p75)),
            ms(self.percentiles.map(|p| p.p95)),
        )?;
        write!(
            f,
            "requests {} failures {} latency range {} - {} over {:.1} s",
            self.total_requests,
            self.total_failures,
            ms(self.min_latency_ms),
            ms(self.max_latency_ms),
            self.duration.as_secs_f64()
        )
    }
}
