//! Network stack: accepts connections, performs TLS, speaks HTTP/1.1, and
//! forwards validated requests to the file-system queue.

use std::convert::Infallible;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bytes::Bytes;
use http_body_util::Full;
use hyper::body::Incoming;
use hyper::header::{HeaderValue, CONNECTION, CONTENT_LENGTH, CONTENT_TYPE};
use hyper::server::conn::http1;
use hyper::service::service_fn;
use hyper::{Method, Request, Response, StatusCode};
use hyper_util::rt::{TokioIo, TokioTimer};
use tokio::io::{AsyncRead, AsyncWrite};
use tokio::net::TcpListener;
use tokio::sync::{oneshot, watch};
use tokio_rustls::TlsAcceptor;

use super::cors::CorsPolicy;
use super::queue::{PushError, TaskQueue};
use super::registry::{HandleRegistry, Session};
use super::worker::{FsTask, Job, Reply};
use crate::roles;
use crate::router::{self, RejectReason};

/// Introspection route, answered only when `debug_handles` is enabled.
pub const DEBUG_HANDLES_PATH: &str = "/_debug/handles";

pub(crate) struct NetShared {
    pub queue: Arc<TaskQueue<FsTask>>,
    pub registry: Arc<HandleRegistry>,
    pub cors: CorsPolicy,
    pub static_enabled: bool,
    pub debug_handles: bool,
    pub idle_timeout: Duration,
    pub active_connections: AtomicUsize,
    pub connections_done: tokio::sync::Notify,
}

pub(crate) async fn accept_loop(
    listener: TcpListener,
    tls: Option<TlsAcceptor>,
    shared: Arc<NetShared>,
    mut shutdown: watch::Receiver<bool>,
) {
    loop {
        let (stream, peer) = tokio::select! {
            res = listener.accept() => match res {
                Ok(conn) => conn,
                Err(e) => {
                    tracing::warn!(error = %e, "accept failed");
                    tokio::time::sleep(Duration::from_millis(10)).await;
                    continue;
                }
            },
            _ = shutdown.changed() => break,
        };
        let _ = stream.set_nodelay(true);
        shared.active_connections.fetch_add(1, Ordering::SeqCst);
        let shared = Arc::clone(&shared);
        let tls = tls.clone();
        let shutdown = shutdown.clone();
        tokio::spawn(async move {
            match tls {
                Some(acceptor) => match acceptor.accept(stream).await {
                    Ok(tls_stream) => serve_connection(tls_stream, &shared, shutdown).await,
                    Err(e) => tracing::debug!(%peer, error = %e, "TLS handshake failed"),
                },
                None => serve_connection(stream, &shared, shutdown).await,
            }
            if shared.active_connections.fetch_sub(1, Ordering::SeqCst) == 1 {
                shared.connections_done.notify_waiters();
            }
        });
    }
}

async fn serve_connection<IO>(io: IO, shared: &Arc<NetShared>, mut shutdown: watch::Receiver<bool>)
where
    IO: AsyncRead + AsyncWrite + Unpin + Send + 'static,
{
    roles::assert_net_allowed("serve_connection");
    let session = Arc::new(Session::new(Arc::clone(&shared.registry)));
    let svc_shared = Arc::clone(shared);
    let svc_session = Arc::clone(&session);
    let service = service_fn(move |req: Request<Incoming>| {
        let shared = Arc::clone(&svc_shared);
        let session = Arc::clone(&svc_session);
        async move { Ok::<_, Infallible>(handle_request(req, &shared, session).await) }
    });
    let mut builder = http1::Builder::new();
    builder
        .timer(TokioTimer::new())
        .header_read_timeout(shared.idle_timeout)
        .keep_alive(true)
        .pipeline_flush(true);
    let conn = builder.serve_connection(TokioIo::new(io), service);
    tokio::pin!(conn);
    tokio::select! {
        res = conn.as_mut() => {
            if let Err(e) = res {
                tracing::debug!(error = %e, "connection closed with error");
            }
        }
        _ = shutdown.changed() => {
            conn.as_mut().graceful_shutdown();
            let _ = conn.await;
        }
    }
}

fn respond(reply: Reply, head_only: bool, cors: &CorsPolicy) -> Response<Full<Bytes>> {
    let len = reply.body.len();
    let body = if head_only { Bytes::new() } else { reply.body };
    let mut resp = Response::new(Full::new(body));
    *resp.status_mut() = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let headers = resp.headers_mut();
    headers.insert(CONTENT_TYPE, HeaderValue::from_static(reply.content_type));
    headers.insert(CONTENT_LENGTH, HeaderValue::from(len));
    for (name, value) in cors.headers() {
        if let Ok(v) = HeaderValue::from_str(&value) {
            headers.insert(name, v);
        }
    }
    resp
}

fn preflight(cors: &CorsPolicy) -> Response<Full<Bytes>> {
    let mut resp = Response::new(Full::new(Bytes::new()));
    *resp.status_mut() = StatusCode::NO_CONTENT;
    for (name, value) in cors.preflight_headers() {
        if let Ok(v) = HeaderValue::from_str(&value) {
            resp.headers_mut().insert(name, v);
        }
    }
    resp
}

async fn submit(shared: &NetShared, session: Arc<Session>, job: Job) -> Result<Reply, Reply> {
    let (tx, rx) = oneshot::channel();
    let task = FsTask {
        job,
        session,
        enqueued: Instant::now(),
        reply: tx,
    };
    match shared.queue.push(task) {
        Ok(()) => {}
        Err(PushError::Full(_)) => return Ok(Reply::error(503, "overloaded")),
        Err(PushError::Closed(_)) => return Err(Reply::error(503, "shutting_down")),
    }
    rx.await.map_err(|_| Reply::error(500, "internal_error"))
}

pub(crate) async fn handle_request(
    req: Request<Incoming>,
    shared: &NetShared,
    session: Arc<Session>,
) -> Response<Full<Bytes>> {
    let method = req.method().clone();
    let head_only = method == Method::HEAD;
    let target = req
        .uri()
        .path_and_query()
        .map(|pq| pq.as_str().to_owned())
        .unwrap_or_else(|| req.uri().path().to_owned());
    let path = target.split('?').next().unwrap_or_default().to_owned();

    if shared.debug_handles && path == DEBUG_HANDLES_PATH && method == Method::GET {
        return match submit(shared, session, Job::Introspect).await {
            Ok(r) | Err(r) => respond(r, false, &shared.cors),
        };
    }

    let job = match router::parse_target(method.as_str(), &target) {
        Ok(_) if method == Method::OPTIONS => return preflight(&shared.cors),
        Ok(api) => Job::Api(api),
        Err(rej) if rej.reason == RejectReason::UnknownRoute && method == Method::OPTIONS => {
            return preflight(&shared.cors)
        }
        Err(rej) if rej.reason == RejectReason::UnknownRoute && shared.static_enabled => {
            Job::Static(path)
        }
        Err(rej) => {
            let mut resp = respond(Reply::error(rej.status, rej.reason.as_str()), head_only, &shared.cors);
            if rej.status == 405 {
                resp.headers_mut()
                    .insert("allow", HeaderValue::from_static(super::cors::ALLOWED_METHODS));
            }
            return resp;
        }
    };

    match submit(shared, session, job).await {
        Ok(reply) => respond(reply, head_only, &shared.cors),
        Err(reply) => {
            let mut resp = respond(reply, head_only, &shared.cors);
            resp.headers_mut().insert(CONNECTION, HeaderValue::from_static("close"));
            resp
        }
    }
}
