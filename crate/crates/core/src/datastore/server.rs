use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tokio::sync::oneshot;

use super::{read_dataset, DatasetError};
use crate::corpus::title_slug;

pub const DEFAULT_PORT: u16 = 8571;

#[derive(Debug, Clone)]
struct Entry {
    topic: String,
    body: Arc<[u8]>,
}

/// Valid dataset files in a directory, keyed by title slug.
#[derive(Debug, Clone, Default)]
pub struct DatasetIndex {
    entries: BTreeMap<String, Entry>,
}

impl DatasetIndex {
    /// Loads every `*.json` in `dir`. Files that fail validation are skipped
    /// with a warning.
    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        let io = |source| DatasetError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut entries = BTreeMap::new();
        for item in std::fs::read_dir(dir).map_err(io)? {
            let path = item.map_err(io)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            match read_dataset(&path) {
                Ok(ds) => {
                    let body = std::fs::read(&path).map_err(|source| DatasetError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    entries.insert(
                        title_slug(&ds.topic),
                        Entry {
                            topic: ds.topic,
                            body: body.into(),
                        },
                    );
                }
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(DatasetIndex { entries })
    }

    pub fn topics(&self) -> Vec<&str> {
        self.entries.values().map(|e| e.topic.as_str()).collect()
    }

    /// Raw file bytes for a title given with spaces or underscores.
    pub fn get(&self, title: &str) -> Option<&[u8]> {
        self.entries.get(&title_slug(title)).map(|e| &*e.body)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

async fn list_topics(State(index): State<Arc<DatasetIndex>>) -> Response {
    axum::Json(index.topics()).into_response()
}

async fn get_dataset(
    State(index): State<Arc<DatasetIndex>>,
    UrlPath(title): UrlPath<String>,
) -> Response {
    match index.get(&title) {
        Some(body) => (
            [(header::CONTENT_TYPE, "application/json; charset=utf-8")],
            body.to_vec(),
        )
            .into_response(),
        None => (
            StatusCode::NOT_FOUND,
            axum::Json(serde_json::json!({ "error": format!("unknown topic {title:?}") })),
        )
            .into_response(),
    }
}

async fn allow_any_origin(mut res: Response) -> Response {
    let headers = res.headers_mut();
    headers.insert(
        header::ACCESS_CONTROL_ALLOW_ORIGIN,
        HeaderValue::from_static("*"),
    );
    headers.insert(
        header::ACCESS_CONTROL_ALLOW_METHODS,
        HeaderValue::from_static("GET, OPTIONS"),
    );
    res
}

/// `GET /api/topics` and `GET /api/datasets/{title}`.
pub fn router(index: DatasetIndex) -> Router {
    Router::new()
        .route("/api/topics", get(list_topics))
        .route("/api/datasets/{title}", get(get_dataset))
        .layer(axum::middleware::map_response(allow_any_origin))
        .with_state(Arc::new(index))
}

/// A server running on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) -> std::io::Result<()> {
        self.join()
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.join()
    }

    fn join(&mut self) -> std::io::Result<()> {
        match self.thread.take() {
            Some(t) => t
                .join()
                .unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
            let _ = self.join();
        }
    }
}

/// Indexes `dir`, binds `addr` and serves on a background thread.
pub fn spawn_server(dir: &Path, addr: &str) -> Result<ServerHandle, DatasetError> {
    let index = DatasetIndex::load(dir)?;
    log::info!("serving {} dataset(s) from {}", index.len(), dir.display());
    let bind_err = |source| DatasetError::Bind {
        addr: addr.to_string(),
        source,
    };
    let listener = std::net::TcpListener::bind(addr).map_err(bind_err)?;
    listener.set_nonblocking(true).map_err(bind_err)?;
    let local = listener.local_addr().map_err(bind_err)?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(index);
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener)?;
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(ServerHandle {
        addr: local,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
