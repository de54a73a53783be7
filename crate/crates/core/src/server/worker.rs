//! File-system stack: workers that resolve slides, read tiles and static
//! files, and hand finished replies back to the network stack.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Instant;

use bytes::Bytes;
use serde_json::json;
use tokio::sync::oneshot;

use super::queue::Consumer;
use super::registry::{HandleRegistry, Session, WadoResolver};
use super::static_files::{StaticError, StaticFiles};
use super::FaultInjection;
use crate::container::{ContainerError, SlideHandle};
use crate::naming::SlideName;
use crate::roles::{self, Role};
use crate::router::{ApiRequest, SlideRef};
use crate::schema::{self, SlideMetadataDoc};

pub const JSON: &str = "application/json";

/// A finished response body handed back to the network stack.
#[derive(Debug, Clone)]
pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Bytes,
}

impl Reply {
    pub fn json(status: u16, value: &serde_json::Value) -> Self {
        Reply {
            status,
            content_type: JSON,
            body: Bytes::from(serde_json::to_vec(value).expect("json serialization")),
        }
    }

    pub fn error(status: u16, reason: &str) -> Self {
        Reply::json(status, &json!({ "error": reason }))
    }
}

#[derive(Debug)]
pub enum Job {
    Api(ApiRequest),
    /// URL path with the query string removed.
    Static(String),
    Introspect,
}

pub struct FsTask {
    pub job: Job,
    pub session: Arc<Session>,
    pub enqueued: Instant,
    pub reply: oneshot::Sender<Reply>,
}

pub(crate) struct FsContext {
    pub registry: Arc<HandleRegistry>,
    pub resolver: WadoResolver,
    pub static_files: Option<StaticFiles>,
    pub fault: Option<FaultInjection>,
}

fn container_error_reply(err: &ContainerError) -> Reply {
    match err {
        e if e.is_not_found() => Reply::error(404, "slide_not_found"),
        ContainerError::NotAContainer(_) => Reply::error(404, "not_a_slide"),
        ContainerError::OutOfRange { .. } => Reply::error(404, "tile_out_of_range"),
        ContainerError::Corrupt(_) => Reply::error(500, "corrupt_container"),
        _ => Reply::error(500, "slide_io_error"),
    }
}

impl FsContext {
    fn resolve(&self, slide: &SlideRef) -> Option<SlideName> {
        match slide {
            SlideRef::Iris(name) => Some(name.clone()),
            SlideRef::Wado { study, series } => self.resolver.resolve(study, series),
        }
    }

    fn open(&self, slide: &SlideRef, session: &Session) -> Result<(SlideName, Arc<SlideHandle>), Reply> {
        let name = self
            .resolve(slide)
            .ok_or_else(|| Reply::error(404, "series_not_found"))?;
        let handle = session.handle(&name).map_err(|e| {
            if !e.is_not_found() {
                tracing::warn!(slide = %name, error = %e, "slide open failed");
            }
            container_error_reply(&e)
        })?;
        Ok((name, handle))
    }

    pub fn execute(&self, job: &Job, session: &Session) -> Reply {
        match job {
            Job::Api(req) => self.api(req, session).unwrap_or_else(|r| r),
            Job::Static(path) => match &self.static_files {
                Some(files) => match files.serve(path) {
                    Ok(f) => Reply {
                        status: 200,
                        content_type: f.content_type,
                        body: f.body,
                    },
                    Err(StaticError::Forbidden(why)) => Reply::error(403, why),
                    Err(e) => Reply::error(e.status(), &e.to_string()),
                },
                None => Reply::error(404, "unknown_route"),
            },
            Job::Introspect => {
                let handles: Vec<_> = self
                    .registry
                    .snapshot()
                    .into_iter()
                    .map(|(name, refcount)| json!({ "slide": name.as_str(), "refcount": refcount }))
                    .collect();
                Reply::json(200, &json!({ "handles": handles }))
            }
        }
    }

    fn api(&self, req: &ApiRequest, session: &Session) -> Result<Reply, Reply> {
        let slide = req.slide_ref();
        let (name, handle) = self.open(&slide, session)?;
        let meta = handle.metadata();
        Ok(match (req, &slide) {
            (ApiRequest::SlideMetadata { .. }, SlideRef::Iris(_)) => {
                Reply::json(200, &serde_json::to_value(SlideMetadataDoc::from(meta)).unwrap())
            }
            (ApiRequest::SlideMetadata { .. }, SlideRef::Wado { study, series }) => {
                Reply::json(200, &schema::wado_series(meta, study.as_str(), series.as_str()))
            }
            (ApiRequest::LayerMetadata { study, series, layer }, _) => {
                let info = meta
                    .layer(*layer)
                    .ok_or_else(|| Reply::error(404, "layer_out_of_range"))?;
                let doc = schema::wado_instance(meta, study.as_str(), series.as_str(), *layer, info);
                Reply::json(200, &serde_json::Value::Array(vec![doc]))
            }
            (ApiRequest::Tile { layer, tile, .. }, _) => {
                if let Some(fault) = &self.fault {
                    if fault.slide == name {
                        thread::sleep(fault.delay);
                    }
                }
                let view = handle
                    .read_tile(*layer, *tile)
                    .map_err(|e| container_error_reply(&e))?;
                Reply {
                    status: 200,
                    content_type: meta.encoding.media_type(),
                    body: view.into_bytes(),
                }
            }
        })
    }
}

pub(crate) fn spawn_workers(
    ctx: Arc<FsContext>,
    consumers: Vec<Consumer<FsTask>>,
) -> std::io::Result<Vec<JoinHandle<()>>> {
    consumers
        .into_iter()
        .enumerate()
        .map(|(i, consumer)| {
            let ctx = Arc::clone(&ctx);
            thread::Builder::new()
                .name(format!("iris-fs-{i}"))
                .spawn(move || {
                    roles::set(Role::FileSystem);
                    while let Some(task) = consumer.pop() {
                        let reply = catch_unwind(AssertUnwindSafe(|| ctx.execute(&task.job, &task.session)))
                            .unwrap_or_else(|_| Reply::error(500, "internal_error"));
                        tracing::trace!(
                            wait_us = task.enqueued.elapsed().as_micros() as u64,
                            status = reply.status,
                            "fs task done"
                        );
                        // The connection may have gone away; nothing to do then.
                        let _ = task.reply.send(reply);
                    }
                })
        })
        .collect()
}
