//! Cross-origin header policy.
//!
//! | `--cors` | `--root` | `Access-Control-Allow-Origin` |
//! |----------|----------|-------------------------------|
//! | set      | any      | the configured origin         |
//! | unset    | unset    | `*`                           |
//! | unset    | set      | absent (same-origin viewer)   |

pub const ALLOWED_METHODS: &str = "GET, HEAD, OPTIONS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorsPolicy {
    AnyOrigin,
    Origin(String),
    SameOrigin,
}

impl CorsPolicy {
    pub fn new(cors_origin: Option<&str>, doc_root_set: bool) -> Self {
        match (cors_origin, doc_root_set) {
            (Some(origin), _) => CorsPolicy::Origin(origin.to_string()),
            (None, false) => CorsPolicy::AnyOrigin,
            (None, true) => CorsPolicy::SameOrigin,
        }
    }

    pub fn allow_origin(&self) -> Option<&str> {
        match self {
            CorsPolicy::AnyOrigin => Some("*"),
            CorsPolicy::Origin(o) => Some(o),
            CorsPolicy::SameOrigin => None,
        }
    }

    /// Headers for an ordinary response.
    pub fn headers(&self) -> Vec<(&'static str, String)> {
        self.allow_origin()
            .map(|o| vec![("access-control-allow-origin", o.to_string())])
            .unwrap_or_default()
    }

    /// Headers for an `OPTIONS` preflight answer.
    pub fn preflight_headers(&self) -> Vec<(&'static str, String)> {
        let mut h = self.headers();
        h.push(("access-control-allow-methods", ALLOWED_METHODS.to_string()));
        h.push(("allow", ALLOWED_METHODS.to_string()));
        if self.allow_origin().is_some() {
            h.push(("access-control-max-age", "86400".to_string()));
        }
        h
    }
}
