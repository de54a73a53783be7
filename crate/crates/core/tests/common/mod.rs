#![allow(dead_code)]

pub mod grammar;
pub mod tls;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::time::Duration;

use iris_core::container::Encoding;
use iris_core::encoder::{build_pyramid, EncodeJob, Source};

/// A parsed HTTP/1.1 response.
#[derive(Debug, Clone)]
pub struct RawResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl RawResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).expect("json body")
    }
}

/// One keep-alive connection that sends targets verbatim, with no URL
/// normalization.
pub struct Conn {
    reader: BufReader<TcpStream>,
}

impl Conn {
    pub fn open(addr: SocketAddr) -> Conn {
        let stream = TcpStream::connect(addr).expect("connect");
        stream.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
        stream.set_nodelay(true).unwrap();
        Conn { reader: BufReader::new(stream) }
    }

    pub fn send(&mut self, method: &str, target: &str, extra: &[(&str, &str)]) {
        let mut req = format!("{method} {target} HTTP/1.1\r\nHost: localhost\r\n");
        for (k, v) in extra {
            req.push_str(&format!("{k}: {v}\r\n"));
        }
        req.push_str("\r\n");
        self.reader.get_mut().write_all(req.as_bytes()).expect("write request");
    }

    pub fn read_response(&mut self, head_only: bool) -> RawResponse {
        let mut line = String::new();
        self.reader.read_line(&mut line).expect("status line");
        let status: u16 = line
            .split_whitespace()
            .nth(1)
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| panic!("bad status line {line:?}"));
        let mut headers = Vec::new();
        loop {
            let mut h = String::new();
            self.reader.read_line(&mut h).expect("header line");
            let h = h.trim_end();
            if h.is_empty() {
                break;
            }
            let (k, v) = h.split_once(':').expect("header colon");
            headers.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut resp = RawResponse { status, headers, body: Vec::new() };
        if !head_only && status != 204 && status != 304 {
            let len: usize = resp
                .header("content-length")
                .expect("content-length")
                .parse()
                .unwrap();
            resp.body = vec![0; len];
            self.reader.read_exact(&mut resp.body).expect("body");
        }
        resp
    }

    pub fn request(&mut self, method: &str, target: &str) -> RawResponse {
        self.send(method, target, &[]);
        self.read_response(method == "HEAD")
    }

    /// True once the server has closed the socket.
    pub fn is_closed(&mut self) -> bool {
        let mut b = [0u8; 1];
        matches!(self.reader.read(&mut b), Ok(0))
    }
}

pub fn get(addr: SocketAddr, target: &str) -> RawResponse {
    Conn::open(addr).request("GET", target)
}

pub fn request(addr: SocketAddr, method: &str, target: &str) -> RawResponse {
    Conn::open(addr).request(method, target)
}

pub fn encode_synthetic(
    dir: &Path,
    name: &str,
    (w, h): (u32, u32),
    seed: u64,
    encoding: Encoding,
    tile: u32,
) -> iris_core::container::SlideMetadata {
    let job = EncodeJob::new(
        Source::Synthetic { width: w, height: h, seed },
        dir.join(format!("{name}.iris")),
    )
    .encoding(encoding)
    .tile_size(tile);
    build_pyramid(&job).expect("encode")
}

/// Reference pattern, written from the pattern definition rather than
/// shared with the encoder.
pub mod oracle {
    pub fn phases(seed: u64) -> [u64; 3] {
        let mut z = seed.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        let h = z ^ (z >> 31);
        [h % 65536, (h / 65536) % 65536, (h / 4294967296) % 65536]
    }

    fn tri(v: u64) -> u8 {
        let period = v % 510;
        let up = period.min(255);
        let down = period.saturating_sub(255);
        (up - down) as u8
    }

    pub fn pixel(seed: u64, x: u32, y: u32) -> [u8; 3] {
        let [a, b, c] = phases(seed);
        let (x, y) = (x as u64, y as u64);
        [tri(x * 3 + a), tri(y * 2 + b), tri(x + y + c)]
    }

    /// Row-major RGB raster.
    #[derive(Clone, Debug)]
    pub struct Raster {
        pub w: usize,
        pub h: usize,
        pub px: Vec<[u8; 3]>,
    }

    impl Raster {
        pub fn synth(w: usize, h: usize, seed: u64) -> Raster {
            let mut px = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    px.push(pixel(seed, x as u32, y as u32));
                }
            }
            Raster { w, h, px }
        }

        pub fn at(&self, x: usize, y: usize) -> [u8; 3] {
            self.px[y * self.w + x]
        }

        /// Each output pixel is the rounded mean of the in-bounds source
        /// pixels of its `f`x`f` block.
        pub fn box_down(&self, f: usize) -> Raster {
            let (w, h) = (self.w.div_ceil(f), self.h.div_ceil(f));
            let mut px = Vec::with_capacity(w * h);
            for oy in 0..h {
                for ox in 0..w {
                    let mut sum = [0u32; 3];
                    let mut n = 0u32;
                    for y in oy * f..((oy + 1) * f).min(self.h) {
                        for x in ox * f..((ox + 1) * f).min(self.w) {
                            let p = self.at(x, y);
                            for c in 0..3 {
                                sum[c] += p[c] as u32;
                            }
                            n += 1;
                        }
                    }
                    px.push(sum.map(|s| ((s + n / 2) / n) as u8));
                }
            }
            Raster { w, h, px }
        }

        /// Tile `(tx, ty)` padded by repeating the last column and row.
        pub fn tile(&self, tx: usize, ty: usize, size: usize) -> Vec<[u8; 3]> {
            let mut out = Vec::with_capacity(size * size);
            for y in 0..size {
                for x in 0..size {
                    let sx = (tx * size + x).min(self.w - 1);
                    let sy = (ty * size + y).min(self.h - 1);
                    out.push(self.at(sx, sy));
                }
            }
            out
        }
    }

    /// Layers lowest resolution first.
    pub fn pyramid(w: usize, h: usize, seed: u64, tile: usize, f: usize) -> Vec<Raster> {
        let mut layers = vec![Raster::synth(w, h, seed)];
        while layers.last().map(|l| l.w > tile || l.h > tile).unwrap() {
            let next = layers.last().unwrap().box_down(f);
            layers.push(next);
        }
        layers.reverse();
        layers
    }
}

/// `(slide, refcount)` pairs from the introspection endpoint.
pub fn debug_handles(addr: SocketAddr) -> Vec<(String, u64)> {
    let resp = get(addr, "/_debug/handles");
    assert_eq!(resp.status, 200, "debug endpoint disabled?");
    resp.json()["handles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| (h["slide"].as_str().unwrap().to_string(), h["refcount"].as_u64().unwrap()))
        .collect()
}

/// Polls `cond` every 10 ms until it holds or `limit` passes.
pub fn wait_until(limit: Duration, mut cond: impl FnMut() -> bool) -> bool {
    let deadline = std::time::Instant::now() + limit;
    loop {
        if cond() {
            return true;
        }
        if std::time::Instant::now() >= deadline {
            return false;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}
