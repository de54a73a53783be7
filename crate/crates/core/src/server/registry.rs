//! Open-slide registry and per-connection sessions.
//!
//! The registry maps slide names to shared [`SlideHandle`]s. A connection
//! retains a slide the first time it touches it and releases it when the
//! connection closes; a handle leaves the registry, and its mapping is
//! dropped, when its last session releases it.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::Deserialize;

use crate::container::{open_container, ContainerError, SlideHandle, CONTAINER_EXTENSION};
use crate::naming::{SafeSegment, SlideName};

#[derive(Debug)]
pub struct HandleRegistry {
    slide_dir: PathBuf,
    handles: Mutex<HashMap<SlideName, Arc<SlideHandle>>>,
}

impl HandleRegistry {
    pub fn new(slide_dir: impl Into<PathBuf>) -> Self {
        HandleRegistry {
            slide_dir: slide_dir.into(),
            handles: Mutex::new(HashMap::new()),
        }
    }

    /// `<slide_dir>/<name>.iris`; names are already restricted to one segment.
    pub fn path_for(&self, name: &SlideName) -> PathBuf {
        self.slide_dir
            .join(format!("{}.{CONTAINER_EXTENSION}", name.as_str()))
    }

    /// Retains an open handle, or opens and registers the slide. Racing
    /// opens of one slide converge on the first registered handle.
    pub fn acquire(&self, name: &SlideName) -> Result<Arc<SlideHandle>, ContainerError> {
        if let Some(handle) = self.lookup_and_retain(name) {
            return Ok(handle);
        }
        let opened = Arc::new(open_container(&self.path_for(name))?);
        let mut handles = self.handles.lock().unwrap();
        match handles.get(name) {
            Some(existing) => {
                existing.retain();
                Ok(Arc::clone(existing))
            }
            None => {
                handles.insert(name.clone(), Arc::clone(&opened));
                Ok(opened)
            }
        }
    }

    fn lookup_and_retain(&self, name: &SlideName) -> Option<Arc<SlideHandle>> {
        let handles = self.handles.lock().unwrap();
        let handle = handles.get(name)?;
        handle.retain();
        Some(Arc::clone(handle))
    }

    /// Looks up a handle without retaining it.
    pub fn get(&self, name: &SlideName) -> Option<Arc<SlideHandle>> {
        self.handles.lock().unwrap().get(name).cloned()
    }

    pub fn release(&self, name: &SlideName) {
        let mut handles = self.handles.lock().unwrap();
        let last = match handles.get(name) {
            Some(handle) => handle.release(),
            None => {
                debug_assert!(false, "release of unregistered slide {name}");
                false
            }
        };
        if last {
            handles.remove(name);
        }
    }

    /// `(slide, refcount)` pairs, sorted by name.
    pub fn snapshot(&self) -> Vec<(SlideName, usize)> {
        let handles = self.handles.lock().unwrap();
        let mut out: Vec<_> = handles
            .iter()
            .map(|(name, h)| (name.clone(), h.refcount()))
            .collect();
        out.sort();
        out
    }

    pub fn len(&self) -> usize {
        self.handles.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Slides retained by one client connection.
#[derive(Debug)]
pub struct Session {
    id: u64,
    registry: Arc<HandleRegistry>,
    retained: Mutex<Vec<SlideName>>,
}

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

impl Session {
    pub fn new(registry: Arc<HandleRegistry>) -> Self {
        Session {
            id: NEXT_SESSION.fetch_add(1, Ordering::Relaxed),
            registry,
            retained: Mutex::new(Vec::new()),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// The slide's handle, retaining it for this session on first use.
    pub fn handle(&self, name: &SlideName) -> Result<Arc<SlideHandle>, ContainerError> {
        let mut retained = self.retained.lock().unwrap();
        if retained.contains(name) {
            if let Some(handle) = self.registry.get(name) {
                return Ok(handle);
            }
            debug_assert!(false, "session retain lost for {name}");
            retained.retain(|n| n != name);
        }
        let handle = self.registry.acquire(name)?;
        retained.push(name.clone());
        Ok(handle)
    }

    pub fn retained(&self) -> Vec<SlideName> {
        self.retained.lock().unwrap().clone()
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let retained = std::mem::take(self.retained.get_mut().unwrap());
        for name in &retained {
            self.registry.release(name);
        }
    }
}

/// Name of the optional WADO identifier manifest inside the slide directory.
pub const WADO_MANIFEST: &str = "wado-manifest.json";

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    study: String,
    series: String,
    slide: String,
}

/// Maps WADO (study, series) identifiers to slide names.
#[derive(Debug, Default)]
pub struct WadoResolver {
    table: Option<HashMap<(SafeSegment, SafeSegment), SlideName>>,
}

impl WadoResolver {
    /// Loads `<slide_dir>/wado-manifest.json` if present. Without a manifest
    /// the series identifier is used as the slide name.
    pub fn load(slide_dir: &Path) -> Result<Self, String> {
        let path = slide_dir.join(WADO_MANIFEST);
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(format!("{}: {e}", path.display())),
        };
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let entries: Vec<ManifestEntry> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut table = HashMap::new();
        for e in entries {
            let seg = |s: &str| SafeSegment::new(s).map_err(|err| format!("{s:?}: {err}"));
            table.insert((seg(&e.study)?, seg(&e.series)?), seg(&e.slide)?);
        }
        Ok(WadoResolver { table: Some(table) })
    }

    pub fn resolve(&self, study: &SafeSegment, series: &SafeSegment) -> Option<SlideName> {
        match &self.table {
            None => Some(series.clone()),
            Some(table) => table.get(&(study.clone(), series.clone())).cloned(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolver_defaults_to_series() {
        let r = WadoResolver::default();
        let s = |v: &str| SafeSegment::new(v).unwrap();
        assert_eq!(r.resolve(&s("S"), &s("slide_a")), Some(s("slide_a")));
    }

    #[test]
    fn resolver_uses_manifest() {
        let r = WadoResolver::from_json(
            r#"[{"study": "ST1", "series": "SE1", "slide": "cervix"}]"#,
        )
        .unwrap();
        let s = |v: &str| SafeSegment::new(v).unwrap();
        assert_eq!(r.resolve(&s("ST1"), &s("SE1")), Some(s("cervix")));
        assert_eq!(r.resolve(&s("ST1"), &s("cervix")), None);
        assert!(WadoResolver::from_json(r#"[{"study": "1.2", "series": "x", "slide": "y"}]"#).is_err());
    }
}
