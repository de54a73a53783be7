//! Document-root file serving for the mixed static/tile deployment.
//!
//! Only allow-listed extensions are served, `.iris` never is, and every
//! resolved path must canonicalize to a location inside the root.

use std::path::{Path, PathBuf};

use bytes::Bytes;
use percent_encoding::percent_decode_str;
use thiserror::Error;

use crate::container::CONTAINER_EXTENSION;
use crate::roles;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StaticError {
    #[error("forbidden: {0}")]
    Forbidden(&'static str),
    #[error("not found")]
    NotFound,
    #[error("static file I/O: {0}")]
    Io(String),
}

impl StaticError {
    pub fn status(&self) -> u16 {
        match self {
            StaticError::Forbidden(_) => 403,
            StaticError::NotFound => 404,
            StaticError::Io(_) => 500,
        }
    }
}

/// Media type for an allow-listed extension.
pub fn content_type(ext: &str) -> Option<&'static str> {
    Some(match ext {
        "html" => "text/html; charset=utf-8",
        "js" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "xml" | "dzi" => "application/xml",
        "ico" => "image/x-icon",
        "svg" => "image/svg+xml",
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub struct StaticFiles {
    root: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticFile {
    pub content_type: &'static str,
    pub body: Bytes,
}

impl StaticFiles {
    pub fn new(root: &Path) -> std::io::Result<Self> {
        Ok(StaticFiles {
            root: root.canonicalize()?,
        })
    }

    /// Validates a URL path (query already stripped) and returns the
    /// root-relative file path it names. Pure; touches no files.
    pub fn relative_path(url_path: &str) -> Result<PathBuf, StaticError> {
        let rest = url_path
            .strip_prefix('/')
            .ok_or(StaticError::Forbidden("relative target"))?;
        let rest = if rest.is_empty() { "index.html" } else { rest };
        let mut rel = PathBuf::new();
        for raw in rest.split('/') {
            let seg = percent_decode_str(raw)
                .decode_utf8()
                .map_err(|_| StaticError::Forbidden("bad encoding"))?;
            if seg.is_empty() || seg == "." || seg == ".." || seg.starts_with('.') {
                return Err(StaticError::Forbidden("path traversal"));
            }
            if seg.contains(['/', '\\', '\0', ':']) {
                return Err(StaticError::Forbidden("path traversal"));
            }
            rel.push(seg.as_ref());
        }
        let ext = rel
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        if ext == CONTAINER_EXTENSION {
            return Err(StaticError::Forbidden("slide containers are not downloadable"));
        }
        if content_type(&ext).is_none() {
            return Err(StaticError::Forbidden("extension not allowed"));
        }
        Ok(rel)
    }

    pub fn serve(&self, url_path: &str) -> Result<StaticFile, StaticError> {
        roles::assert_fs_allowed("static file read");
        let rel = Self::relative_path(url_path)?;
        let full = self.root.join(&rel).canonicalize().map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => StaticError::NotFound,
            _ => StaticError::Io(e.to_string()),
        })?;
        if !full.starts_with(&self.root) {
            return Err(StaticError::Forbidden("path escapes document root"));
        }
        // The canonical target may differ from the request via symlinks.
        let ext = full
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        let ct = content_type(&ext).ok_or(StaticError::Forbidden("extension not allowed"))?;
        if !full.is_file() {
            return Err(StaticError::NotFound);
        }
        let body = std::fs::read(&full).map_err(|e| StaticError::Io(e.to_string()))?;
        Ok(StaticFile {
            content_type: ct,
            body: Bytes::from(body),
        })
    }
}
