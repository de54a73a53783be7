//! Strict request-target parsing for the Iris and WADO-RS dialects.
//!
//! Accepted targets (nothing else):
//!
//! ```text
//! /slides/<slide>/metadata
//! /slides/<slide>/layers/<layer>/tiles/<tile>
//! /studies/<study>/series/<series>/metadata
//! /studies/<study>/series/<series>/instances/<layer>/metadata
//! /studies/<study>/series/<series>/instances/<layer>/frames/<frame>
//! ```
//!
//! Identifiers use the [`SafeSegment`] class. Numbers are canonical base-10
//! (no sign, no leading zeros, at most nine digits). WADO frames are 1-based.

mod grid;

use std::fmt;

use crate::naming::{SafeSegment, SlideName};

pub use grid::{tile_coords, tile_index, GridError};

/// Longest numeric path segment.
pub const MAX_NUMBER_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Iris,
    Wado,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestKind {
    SlideMetadata,
    LayerMetadata,
    Tile,
}

/// How a request names its slide.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SlideRef {
    Iris(SlideName),
    Wado {
        study: SafeSegment,
        series: SafeSegment,
    },
}

impl SlideRef {
    pub fn dialect(&self) -> Dialect {
        match self {
            SlideRef::Iris(_) => Dialect::Iris,
            SlideRef::Wado { .. } => Dialect::Wado,
        }
    }
}

/// A fully validated API request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApiRequest {
    SlideMetadata {
        slide: SlideRef,
    },
    /// WADO instance metadata; a single layer of the slide.
    LayerMetadata {
        study: SafeSegment,
        series: SafeSegment,
        layer: u32,
    },
    Tile {
        slide: SlideRef,
        layer: u32,
        /// 0-based raster index (WADO frame minus one).
        tile: u32,
    },
}

impl ApiRequest {
    pub fn dialect(&self) -> Dialect {
        match self {
            ApiRequest::SlideMetadata { slide } | ApiRequest::Tile { slide, .. } => slide.dialect(),
            ApiRequest::LayerMetadata { .. } => Dialect::Wado,
        }
    }

    pub fn kind(&self) -> RequestKind {
        match self {
            ApiRequest::SlideMetadata { .. } => RequestKind::SlideMetadata,
            ApiRequest::LayerMetadata { .. } => RequestKind::LayerMetadata,
            ApiRequest::Tile { .. } => RequestKind::Tile,
        }
    }

    pub fn slide_ref(&self) -> SlideRef {
        match self {
            ApiRequest::SlideMetadata { slide } | ApiRequest::Tile { slide, .. } => slide.clone(),
            ApiRequest::LayerMetadata { study, series, .. } => SlideRef::Wado {
                study: study.clone(),
                series: series.clone(),
            },
        }
    }

    /// The canonical target for this request; `parse_target` of the result
    /// yields `self` again.
    pub fn to_target(&self) -> String {
        match self {
            ApiRequest::SlideMetadata { slide: SlideRef::Iris(name) } => {
                format!("/slides/{name}/metadata")
            }
            ApiRequest::SlideMetadata { slide: SlideRef::Wado { study, series } } => {
                format!("/studies/{study}/series/{series}/metadata")
            }
            ApiRequest::LayerMetadata { study, series, layer } => {
                format!("/studies/{study}/series/{series}/instances/{layer}/metadata")
            }
            ApiRequest::Tile { slide: SlideRef::Iris(name), layer, tile } => {
                format!("/slides/{name}/layers/{layer}/tiles/{tile}")
            }
            ApiRequest::Tile { slide: SlideRef::Wado { study, series }, layer, tile } => format!(
                "/studies/{study}/series/{series}/instances/{layer}/frames/{}",
                *tile as u64 + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    MethodNotAllowed,
    QueryNotAllowed,
    TrailingSlash,
    BadSegment,
    BadNumber,
    FrameZero,
    MalformedRoute,
    /// Outside the API namespace; the server may still try static files.
    UnknownRoute,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::MethodNotAllowed => "method_not_allowed",
            RejectReason::QueryNotAllowed => "query_not_allowed",
            RejectReason::TrailingSlash => "trailing_slash",
            RejectReason::BadSegment => "bad_segment",
            RejectReason::BadNumber => "bad_number",
            RejectReason::FrameZero => "frame_zero",
            RejectReason::MalformedRoute => "malformed_route",
            RejectReason::UnknownRoute => "unknown_route",
        }
    }

    pub fn status(self) -> u16 {
        match self {
            RejectReason::MethodNotAllowed => 405,
            RejectReason::UnknownRoute => 404,
            _ => 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteRejection {
    pub status: u16,
    pub reason: RejectReason,
}

impl From<RejectReason> for RouteRejection {
    fn from(reason: RejectReason) -> Self {
        RouteRejection {
            status: reason.status(),
            reason,
        }
    }
}

impl fmt::Display for RouteRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.status, self.reason.as_str())
    }
}

impl std::error::Error for RouteRejection {}

pub fn is_allowed_method(method: &str) -> bool {
    matches!(method, "GET" | "HEAD" | "OPTIONS")
}

fn segment(s: &str) -> Result<SafeSegment, RejectReason> {
    SafeSegment::new(s).map_err(|_| RejectReason::BadSegment)
}

fn number(s: &str) -> Result<u32, RejectReason> {
    let canonical = !s.is_empty()
        && s.len() <= MAX_NUMBER_DIGITS
        && s.bytes().all(|b| b.is_ascii_digit())
        && (s == "0" || !s.starts_with('0'));
    if !canonical {
        return Err(RejectReason::BadNumber);
    }
    s.parse().map_err(|_| RejectReason::BadNumber)
}

/// Converts a 1-based WADO frame number to a 0-based tile index.
pub fn wado_frame_to_tile(frame: u32) -> Result<u32, RouteRejection> {
    frame
        .checked_sub(1)
        .ok_or(RouteRejection::from(RejectReason::FrameZero))
}

/// Parses a request target. The target must not be percent-encoded beyond
/// what the safe segment class allows; any `%` simply fails validation.
pub fn parse_target(method: &str, target: &str) -> Result<ApiRequest, RouteRejection> {
    if !is_allowed_method(method) {
        return Err(RejectReason::MethodNotAllowed.into());
    }
    let (path, query) = match target.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (target, None),
    };
    let Some(rest) = path.strip_prefix('/') else {
        return Err(RejectReason::MalformedRoute.into());
    };
    let segs: Vec<&str> = rest.split('/').collect();
    if !matches!(segs[0], "slides" | "studies") {
        return Err(RejectReason::UnknownRoute.into());
    }
    if query.is_some() {
        return Err(RejectReason::QueryNotAllowed.into());
    }
    if path.ends_with('/') {
        return Err(RejectReason::TrailingSlash.into());
    }
    parse_segments(&segs).map_err(RouteRejection::from)
}

fn parse_segments(segs: &[&str]) -> Result<ApiRequest, RejectReason> {
    Ok(match segs {
        ["slides", name, "metadata"] => ApiRequest::SlideMetadata {
            slide: SlideRef::Iris(segment(name)?),
        },
        ["slides", name, "layers", layer, "tiles", tile] => ApiRequest::Tile {
            slide: SlideRef::Iris(segment(name)?),
            layer: number(layer)?,
            tile: number(tile)?,
        },
        ["studies", study, "series", series, "metadata"] => ApiRequest::SlideMetadata {
            slide: SlideRef::Wado {
                study: segment(study)?,
                series: segment(series)?,
            },
        },
        ["studies", study, "series", series, "instances", layer, "metadata"] => {
            ApiRequest::LayerMetadata {
                study: segment(study)?,
                series: segment(series)?,
                layer: number(layer)?,
            }
        }
        ["studies", study, "series", series, "instances", layer, "frames", frame] => {
            let frame = number(frame)?;
            ApiRequest::Tile {
                slide: SlideRef::Wado {
                    study: segment(study)?,
                    series: segment(series)?,
                },
                layer: number(layer)?,
                tile: frame.checked_sub(1).ok_or(RejectReason::FrameZero)?,
            }
        }
        _ => return Err(RejectReason::MalformedRoute),
    })
}
