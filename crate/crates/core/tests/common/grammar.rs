//! Target generators and an independent route matcher for grammar tests.

use iris_core::router::{parse_target, ApiRequest, SlideRef};
use rand::seq::SliceRandom;
use rand::Rng;

const SAFE: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-";

pub fn segment<R: Rng>(rng: &mut R) -> String {
    let len = if rng.gen_bool(0.05) { 128 } else { rng.gen_range(1..12) };
    (0..len).map(|_| *SAFE.choose(rng).unwrap() as char).collect()
}

pub fn number<R: Rng>(rng: &mut R) -> u32 {
    match rng.gen_range(0..4) {
        0 => 0,
        1 => rng.gen_range(1..10),
        2 => rng.gen_range(0..100_000),
        _ => rng.gen_range(0..1_000_000_000),
    }
}

/// A well-formed target for one of the five route forms.
pub fn valid_target<R: Rng>(rng: &mut R) -> String {
    let (a, b) = (segment(rng), segment(rng));
    let (l, t) = (number(rng), number(rng));
    match rng.gen_range(0..5) {
        0 => format!("/slides/{a}/metadata"),
        1 => format!("/slides/{a}/layers/{l}/tiles/{t}"),
        2 => format!("/studies/{a}/series/{b}/metadata"),
        3 => format!("/studies/{a}/series/{b}/instances/{l}/metadata"),
        _ => format!("/studies/{a}/series/{b}/instances/{l}/frames/{}", t.max(1)),
    }
}

const NOISE: &[&str] = &[
    "/", ".", "..", "%", "%2e", "%2F", "?", "?x=1", "#", "\\", "0", "00", "-1", "+1", " ", "\t",
    "\u{e9}", "\u{0}", "~", ":", ";", "@", "9999999999", "4294967296", "//", "./", "../",
    "metadata", "tiles", "frames", "layers", "instances", "series", "studies", "slides",
];

/// Applies one to three random edits.
pub fn mutate<R: Rng>(rng: &mut R, target: &str) -> String {
    let mut s: Vec<char> = target.chars().collect();
    for _ in 0..rng.gen_range(1..=3) {
        let pos = rng.gen_range(0..=s.len());
        match rng.gen_range(0..6) {
            0 if !s.is_empty() => {
                s.remove(pos.min(s.len() - 1));
            }
            1 | 2 => {
                let ins: Vec<char> = NOISE.choose(rng).unwrap().chars().collect();
                s.splice(pos..pos, ins);
            }
            3 if !s.is_empty() => {
                let i = pos.min(s.len() - 1);
                s[i] = *b"0/a.9".choose(rng).unwrap() as char;
            }
            4 => {
                // Swap two segments.
                let joined: String = s.iter().collect();
                let mut segs: Vec<&str> = joined.split('/').collect();
                if segs.len() > 2 {
                    let i = rng.gen_range(1..segs.len());
                    let j = rng.gen_range(1..segs.len());
                    segs.swap(i, j);
                }
                s = segs.join("/").chars().collect();
            }
            _ => {
                let joined: String = s.iter().collect();
                let mut segs: Vec<String> = joined.split('/').map(String::from).collect();
                let i = rng.gen_range(0..segs.len());
                segs[i] = match rng.gen_range(0..4) {
                    0 => "..".into(),
                    1 => "x".repeat(129),
                    2 => format!("0{}", segs[i]),
                    _ => String::new(),
                };
                s = segs.join("/").chars().collect();
            }
        }
    }
    s.into_iter().collect()
}

fn oracle_segment(s: &str) -> bool {
    (1..=128).contains(&s.len()) && s.bytes().all(|b| SAFE.contains(&b))
}

fn oracle_number(s: &str) -> Option<u32> {
    let ok = (1..=9).contains(&s.len())
        && s.bytes().all(|b| b.is_ascii_digit())
        && (s.len() == 1 || !s.starts_with('0'));
    if ok { s.parse().ok() } else { None }
}

/// Route form and numeric fields if `target` is in the grammar.
#[derive(Debug, PartialEq, Eq)]
pub enum Parsed {
    IrisMeta(String),
    IrisTile(String, u32, u32),
    WadoSeries(String, String),
    WadoInstance(String, String, u32),
    WadoFrame(String, String, u32, u32),
}

pub fn oracle(target: &str) -> Option<Parsed> {
    let rest = target.strip_prefix('/')?;
    let p: Vec<&str> = rest.split('/').collect();
    let seg = |i: usize| oracle_segment(p[i]).then(|| p[i].to_string());
    let num = |i: usize| oracle_number(p[i]);
    match (p.len(), p[0]) {
        (3, "slides") if p[2] == "metadata" => Some(Parsed::IrisMeta(seg(1)?)),
        (6, "slides") if p[2] == "layers" && p[4] == "tiles" => {
            Some(Parsed::IrisTile(seg(1)?, num(3)?, num(5)?))
        }
        (5, "studies") if p[2] == "series" && p[4] == "metadata" => {
            Some(Parsed::WadoSeries(seg(1)?, seg(3)?))
        }
        (7, "studies") if p[2] == "series" && p[4] == "instances" && p[6] == "metadata" => {
            Some(Parsed::WadoInstance(seg(1)?, seg(3)?, num(5)?))
        }
        (8, "studies") if p[2] == "series" && p[4] == "instances" && p[6] == "frames" => {
            let frame = num(7)?;
            (frame >= 1).then_some(())?;
            Some(Parsed::WadoFrame(seg(1)?, seg(3)?, num(5)?, frame))
        }
        _ => None,
    }
}

pub fn as_parsed(req: &ApiRequest) -> Parsed {
    match req {
        ApiRequest::SlideMetadata { slide: SlideRef::Iris(n) } => Parsed::IrisMeta(n.to_string()),
        ApiRequest::SlideMetadata { slide: SlideRef::Wado { study, series } } => {
            Parsed::WadoSeries(study.to_string(), series.to_string())
        }
        ApiRequest::LayerMetadata { study, series, layer } => {
            Parsed::WadoInstance(study.to_string(), series.to_string(), *layer)
        }
        ApiRequest::Tile { slide: SlideRef::Iris(n), layer, tile } => {
            Parsed::IrisTile(n.to_string(), *layer, *tile)
        }
        ApiRequest::Tile { slide: SlideRef::Wado { study, series }, layer, tile } => {
            Parsed::WadoFrame(study.to_string(), series.to_string(), *layer, tile + 1)
        }
    }
}

pub fn traversal_probes() -> Vec<String> {
    [
        "/slides/../metadata",
        "/slides/..%2Fetc/metadata",
        "/slides/%2e%2e/metadata",
        "/slides/./metadata",
        "/slides/a/../b/metadata",
        "/slides/a/layers/../tiles/0",
        "/slides/a%2F..%2F..%2Fetc%2Fpasswd/metadata",
        "/slides/..\\..\\etc/metadata",
        "/slides/.hidden/metadata",
        "/slides/a.iris/metadata",
        "/slides//metadata",
        "//slides/a/metadata",
        "/studies/../series/x/metadata",
        "/studies/s/series/../instances/0/frames/1",
        "/studies/s/series/%2e%2e/metadata",
        "/slides/a\u{0}/metadata",
        "/slides/%00/metadata",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn overflow_probes() -> Vec<String> {
    let long = "a".repeat(129);
    vec![
        "/slides/a/layers/4294967296/tiles/0".into(),
        "/slides/a/layers/0/tiles/4294967296".into(),
        "/slides/a/layers/0/tiles/99999999999999999999".into(),
        "/slides/a/layers/0/tiles/1000000000".into(),
        "/slides/a/layers/-1/tiles/0".into(),
        "/slides/a/layers/+1/tiles/0".into(),
        "/slides/a/layers/01/tiles/0".into(),
        "/slides/a/layers/0x1/tiles/0".into(),
        "/slides/a/layers/1e3/tiles/0".into(),
        "/studies/s/series/u/instances/0/frames/0".into(),
        "/studies/s/series/u/instances/0/frames/4294967296".into(),
        format!("/slides/{long}/metadata"),
        format!("/studies/{long}/series/u/metadata"),
    ]
}

#[derive(Debug, Default)]
pub struct CorpusStats {
    pub mutants: usize,
    pub accepted: usize,
    pub reserialize_failures: Vec<String>,
    pub oracle_disagreements: Vec<String>,
}

/// Mutates `n` valid targets and checks every acceptance.
pub fn run_corpus<R: Rng>(rng: &mut R, n: usize) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for _ in 0..n {
        let base = valid_target(rng);
        let m = mutate(rng, &base);
        stats.mutants += 1;
        let got = parse_target("GET", &m);
        let want = oracle(&m);
        match &got {
            Ok(req) => {
                stats.accepted += 1;
                if req.to_target() != m {
                    stats.reserialize_failures.push(m.clone());
                }
                if want.as_ref() != Some(&as_parsed(req)) {
                    stats.oracle_disagreements.push(m.clone());
                }
            }
            Err(_) if want.is_some() => stats.oracle_disagreements.push(m.clone()),
            Err(_) => {}
        }
    }
    stats
}
