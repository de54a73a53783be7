//! URL-safe identifiers shared by the container layer and the router.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Longest identifier accepted in a path segment.
pub const MAX_SEGMENT_LEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier longer than {MAX_SEGMENT_LEN} bytes")]
    TooLong,
    #[error("identifier contains {0:?}, only [A-Za-z0-9_-] is allowed")]
    BadChar(char),
}

/// A path segment restricted to `[A-Za-z0-9_-]{1,128}`.
///
/// Slide names, WADO study identifiers and series identifiers all use this
/// class, so a validated value can never carry `/`, `.`, `%` or NUL.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SafeSegment(String);

/// Slide identifier; equals the container file stem.
pub type SlideName = SafeSegment;

pub fn is_safe_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

impl SafeSegment {
    pub fn new(s: impl Into<String>) -> Result<Self, SegmentError> {
        let s = s.into();
        if s.is_empty() {
            return Err(SegmentError::Empty);
        }
        if s.len() > MAX_SEGMENT_LEN {
            return Err(SegmentError::TooLong);
        }
        if let Some(c) = s.chars().find(|c| !is_safe_char(*c)) {
            return Err(SegmentError::BadChar(c));
        }
        Ok(Self(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for SafeSegment {
    type Err = SegmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for SafeSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for SafeSegment {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_example_slide_name() {
        assert!(SafeSegment::new("cervix_2x_jpeg").is_ok());
    }

    #[test]
    fn rejects_traversal_and_separators() {
        for bad in ["..", "a/b", "a.iris", "a\0", "a b", "%2e", ""] {
            assert!(SafeSegment::new(bad).is_err(), "{bad:?}");
        }
        assert_eq!(SafeSegment::new("x".repeat(129)), Err(SegmentError::TooLong));
    }
}
