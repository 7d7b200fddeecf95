//! HTTP front end for [`TrustAuthority`].

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::oneshot;

use super::{AuthorityError, TrustAuthority};
use crate::canon::Record;
use crate::crypto::{Fingerprint, PublicKey};

pub const ADMIN_TOKEN_HEADER: &str = "x-admin-token";

type Shared = Arc<TrustAuthority>;

pub fn router(authority: Shared) -> Router {
    Router::new()
        .route("/v1/manufacturers", post(register))
        .route("/v1/manufacturers/{fingerprint}/approve", post(approve))
        .route("/v1/manufacturers/{fingerprint}/revoke", post(revoke))
        .route("/v1/trustlist", get(trust_list))
        .route("/v1/healthz", get(|| async { "ok" }))
        .with_state(authority)
}

fn text(status: StatusCode, record: Record) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        record.to_canonical_string(),
    )
        .into_response()
}

fn error(status: StatusCode, code: &str, detail: impl std::fmt::Display) -> Response {
    text(
        status,
        Record::new().with("error", code).with("detail", detail),
    )
}

fn authority_error(e: AuthorityError) -> Response {
    let status = match &e {
        AuthorityError::AlreadyRegistered(_) | AuthorityError::InvalidTransition { .. } => {
            StatusCode::CONFLICT
        }
        AuthorityError::NotFound(_) => StatusCode::NOT_FOUND,
        AuthorityError::Unauthorized => StatusCode::UNAUTHORIZED,
        AuthorityError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
        AuthorityError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    let code = match &e {
        AuthorityError::AlreadyRegistered(_) => "already-registered",
        AuthorityError::InvalidTransition { .. } => "invalid-transition",
        AuthorityError::NotFound(_) => "not-found",
        AuthorityError::Unauthorized => "unauthorized",
        AuthorityError::InvalidRequest(_) => "invalid-request",
        AuthorityError::Log(_) => "internal",
    };
    error(status, code, e)
}

fn parse_body(body: &Bytes) -> Result<Record, Response> {
    std::str::from_utf8(body)
        .map_err(|_| {
            error(
                StatusCode::BAD_REQUEST,
                "invalid-request",
                "body is not UTF-8",
            )
        })
        .and_then(|s| {
            Record::parse_lenient(s)
                .map_err(|e| error(StatusCode::BAD_REQUEST, "invalid-request", e))
        })
}

async fn register(State(auth): State<Shared>, body: Bytes) -> Response {
    let record = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let (Some(name), Some(key)) = (record.get("name"), record.get("public_key")) else {
        return error(
            StatusCode::BAD_REQUEST,
            "invalid-request",
            "name and public_key are required",
        );
    };
    let public_key: PublicKey = match key.trim().parse() {
        Ok(k) => k,
        Err(e) => return error(StatusCode::BAD_REQUEST, "invalid-request", e),
    };
    match tokio::task::block_in_place(|| auth.register_manufacturer(name, public_key)) {
        Ok(rec) => text(
            StatusCode::CREATED,
            Record::new()
                .with("fingerprint", rec.fingerprint)
                .with("status", rec.status),
        ),
        Err(e) => authority_error(e),
    }
}

fn admin_token(headers: &HeaderMap) -> &str {
    headers
        .get(ADMIN_TOKEN_HEADER)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
}

fn path_fingerprint(raw: &str) -> Result<Fingerprint, Response> {
    raw.parse()
        .map_err(|e| error(StatusCode::BAD_REQUEST, "invalid-request", e))
}

async fn approve(
    State(auth): State<Shared>,
    Path(fp): Path<String>,
    headers: HeaderMap,
) -> Response {
    let fp = match path_fingerprint(&fp) {
        Ok(fp) => fp,
        Err(resp) => return resp,
    };
    match tokio::task::block_in_place(|| auth.approve(&fp, admin_token(&headers))) {
        Ok(list) => text(
            StatusCode::OK,
            Record::new().with("list_version", list.list_version),
        ),
        Err(e) => authority_error(e),
    }
}

async fn revoke(
    State(auth): State<Shared>,
    Path(fp): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let fp = match path_fingerprint(&fp) {
        Ok(fp) => fp,
        Err(resp) => return resp,
    };
    let reason = match parse_body(&body) {
        Ok(r) => r.get("reason").unwrap_or_default().to_string(),
        Err(resp) => return resp,
    };
    match tokio::task::block_in_place(|| auth.revoke(&fp, admin_token(&headers), &reason)) {
        Ok(list) => text(
            StatusCode::OK,
            Record::new().with("list_version", list.list_version),
        ),
        Err(e) => authority_error(e),
    }
}

async fn trust_list(State(auth): State<Shared>) -> Response {
    let published = auth.published();
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        published.wire.clone(),
    )
        .into_response()
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    authority: Shared,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(authority))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server running on its own runtime thread; stops when dropped.
pub struct LocalServer {
    pub addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl LocalServer {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for LocalServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `127.0.0.1:0` and serves `authority` on a background thread.
pub fn spawn_local(authority: Shared) -> std::io::Result<LocalServer> {
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
            let _ = serve(listener, authority, async {
                let _ = rx.await;
            })
            .await;
        });
    });
    Ok(LocalServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
