//! The tile server.
//!
//! Two independent stacks share the process:
//!
//! ```text
//!  clients ──► network threads (tokio, net_workers)   accept · TLS · HTTP/1.1
//!                 │  parse_target; reject malformed targets here
//!                 ▼
//!            TaskQueue<FsTask>  bounded lock-free FIFO (503 when full)
//!                 ▼
//!            file-system threads (fs_workers)          open · validate · read
//!                 │  HandleRegistry: one mmap'd SlideHandle per slide
//!                 ▼
//!            oneshot reply ──► owning connection writes the response
//! ```
//!
//! Network threads never open or read containers; file-system threads never
//! touch sockets. A slow slide therefore stalls at most the workers reading
//! it, and other slides keep flowing through the remaining workers.

pub mod cors;
mod net;
pub mod queue;
pub mod registry;
pub mod static_files;
pub mod tls;
mod worker;

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;
use tokio::runtime::Runtime;
use tokio::sync::watch;

use crate::naming::SlideName;
use crate::roles::{self, Role};

pub use cors::CorsPolicy;
pub use net::DEBUG_HANDLES_PATH;
pub use queue::{Consumer, PushError, TaskQueue};
pub use registry::{HandleRegistry, Session, WadoResolver, WADO_MANIFEST};
pub use static_files::{StaticError, StaticFiles};
pub use tls::{ensure_tls, generate_self_signed, TlsMaterial};
pub use worker::Reply;

pub const DEFAULT_PORT: u16 = 3000;
pub const DEFAULT_QUEUE_CAPACITY: usize = 4096;
pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(60);
const SHUTDOWN_GRACE: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("TLS setup failed: {0}")]
    Tls(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Test hook: delays every tile read of one slide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultInjection {
    pub slide: SlideName,
    pub delay: Duration,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: IpAddr,
    pub port: u16,
    pub slide_dir: PathBuf,
    pub cert_path: Option<PathBuf>,
    pub key_path: Option<PathBuf>,
    pub cors_origin: Option<String>,
    pub doc_root: Option<PathBuf>,
    pub https_enabled: bool,
    pub fs_workers: usize,
    pub net_workers: usize,
    pub queue_capacity: usize,
    pub idle_timeout: Duration,
    /// Enables `GET /_debug/handles`.
    pub debug_handles: bool,
    pub fault_injection: Option<FaultInjection>,
}

fn hardware_threads() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

impl ServerConfig {
    pub fn new(slide_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            bind: IpAddr::V4(Ipv4Addr::UNSPECIFIED),
            port: DEFAULT_PORT,
            slide_dir: slide_dir.into(),
            cert_path: None,
            key_path: None,
            cors_origin: None,
            doc_root: None,
            https_enabled: true,
            fs_workers: hardware_threads(),
            net_workers: hardware_threads().div_ceil(2),
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            debug_handles: false,
            fault_injection: None,
        }
    }

    /// Loopback, ephemeral port, plain HTTP. Convenient for tests and examples.
    pub fn local(slide_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 0,
            https_enabled: false,
            ..ServerConfig::new(slide_dir)
        }
    }

    pub fn validate(&self) -> Result<(), ServerError> {
        if self.cert_path.is_some() != self.key_path.is_some() {
            return Err(ServerError::Config("--cert and --key must be given together".into()));
        }
        if !self.slide_dir.is_dir() {
            return Err(ServerError::Config(format!(
                "slide directory {} is not a readable directory",
                self.slide_dir.display()
            )));
        }
        std::fs::read_dir(&self.slide_dir).map_err(|e| {
            ServerError::Config(format!("slide directory {}: {e}", self.slide_dir.display()))
        })?;
        if let Some(root) = &self.doc_root {
            if !root.is_dir() {
                return Err(ServerError::Config(format!(
                    "document root {} is not a directory",
                    root.display()
                )));
            }
        }
        if self.fs_workers == 0 || self.net_workers == 0 {
            return Err(ServerError::Config("worker counts must be positive".into()));
        }
        if self.queue_capacity == 0 {
            return Err(ServerError::Config("queue capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn cors_policy(&self) -> CorsPolicy {
        CorsPolicy::new(self.cors_origin.as_deref(), self.doc_root.is_some())
    }
}

/// A running server. Dropping it without [`Server::shutdown`] aborts the
/// network runtime.
pub struct Server {
    addr: SocketAddr,
    tls: bool,
    runtime: Option<Runtime>,
    shutdown_tx: watch::Sender<bool>,
    shared: Arc<net::NetShared>,
    workers: Vec<JoinHandle<()>>,
}

impl Server {
    /// Validates `config`, binds the listener, and starts both stacks.
    pub fn start(config: ServerConfig) -> Result<Server, ServerError> {
        config.validate()?;
        let tls = ensure_tls(&config)?;
        let resolver = WadoResolver::load(&config.slide_dir).map_err(ServerError::Config)?;
        let static_files = config.doc_root.as_deref().map(StaticFiles::new).transpose()?;
        let registry = Arc::new(HandleRegistry::new(&config.slide_dir));

        let (queue, consumers) = TaskQueue::new(config.queue_capacity, config.fs_workers);
        let ctx = Arc::new(worker::FsContext {
            registry: Arc::clone(&registry),
            resolver,
            static_files,
            fault: config.fault_injection.clone(),
        });
        let workers = worker::spawn_workers(ctx, consumers)?;

        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(config.net_workers)
            .thread_name("iris-net")
            .on_thread_start(|| roles::set(Role::Network))
            .enable_all()
            .build()?;

        let addr = SocketAddr::new(config.bind, config.port);
        let std_listener =
            std::net::TcpListener::bind(addr).map_err(|source| ServerError::Bind { addr, source })?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let listener = {
            let _guard = runtime.enter();
            tokio::net::TcpListener::from_std(std_listener)?
        };

        let shared = Arc::new(net::NetShared {
            queue,
            registry,
            cors: config.cors_policy(),
            static_enabled: config.doc_root.is_some(),
            debug_handles: config.debug_handles,
            idle_timeout: config.idle_timeout,
            active_connections: AtomicUsize::new(0),
            connections_done: tokio::sync::Notify::new(),
        });
        let (shutdown_tx, shutdown_rx) = watch::channel(false);
        let acceptor = tls.map(tokio_rustls::TlsAcceptor::from);
        runtime.spawn(net::accept_loop(listener, acceptor.clone(), Arc::clone(&shared), shutdown_rx));
        tracing::info!(
            %addr,
            https = acceptor.is_some(),
            fs_workers = config.fs_workers,
            net_workers = config.net_workers,
            "iris server listening"
        );
        Ok(Server {
            addr,
            tls: acceptor.is_some(),
            runtime: Some(runtime),
            shutdown_tx,
            shared,
            workers,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://` or `https://` base URL of the listener.
    pub fn base_url(&self) -> String {
        let scheme = if self.tls { "https" } else { "http" };
        let host = match self.addr.ip() {
            ip if ip.is_unspecified() => IpAddr::V4(Ipv4Addr::LOCALHOST),
            ip => ip,
        };
        format!("{scheme}://{}", SocketAddr::new(host, self.addr.port()))
    }

    pub fn registry(&self) -> &HandleRegistry {
        &self.shared.registry
    }

    pub fn active_connections(&self) -> usize {
        self.shared.active_connections.load(Ordering::SeqCst)
    }

    /// Stops accepting, lets open connections finish their in-flight
    /// requests, then drains the task queue and joins the workers.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        let Some(runtime) = self.runtime.take() else {
            return;
        };
        let _ = self.shutdown_tx.send(true);
        let shared = Arc::clone(&self.shared);
        runtime.block_on(async {
            let wait = async {
                while shared.active_connections.load(Ordering::SeqCst) > 0 {
                    let notified = shared.connections_done.notified();
                    if shared.active_connections.load(Ordering::SeqCst) == 0 {
                        break;
                    }
                    let _ = tokio::time::timeout(Duration::from_millis(50), notified).await;
                }
            };
            let _ = tokio::time::timeout(SHUTDOWN_GRACE, wait).await;
        });
        self.shared.queue.close();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
        runtime.shutdown_timeout(Duration::from_secs(1));
    }

    /// Serves until Ctrl-C, then shuts down gracefully.
    pub fn run_until_ctrl_c(self) -> Result<(), ServerError> {
        let signal = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        signal.block_on(tokio::signal::ctrl_c())?;
        tracing::info!("shutdown requested");
        self.shutdown();
        Ok(())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Runs a server for `config` until interrupted.
pub fn serve(config: ServerConfig) -> Result<(), ServerError> {
    Server::start(config)?.run_until_ctrl_c()
}
