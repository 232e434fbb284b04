//! HTTP front of a [`SimLedger`]: range reads, size, genesis and roots, plus
//! an append hook enabled only in mutable mode.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use credsearch_core::ledger::TxnType;
use credsearch_core::sim::{SimError, SimLedger};
use parking_lot::RwLock;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::LEDGER_SIZE_HEADER;

pub const DEFAULT_MAX_BATCH: u64 = 1000;

#[derive(Debug)]
pub struct SimServer {
    ledger: RwLock<SimLedger>,
    mutable: bool,
    max_batch: u64,
}

impl SimServer {
    pub fn new(ledger: SimLedger, mutable: bool, max_batch: u64) -> Arc<Self> {
        Arc::new(Self {
            ledger: RwLock::new(ledger),
            mutable,
            max_batch: max_batch.max(1),
        })
    }

    pub fn len(&self) -> u64 {
        self.ledger.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends through the same validation as `POST /txns`.
    pub fn append(&self, doc: Value) -> Result<u64, SimError> {
        self.ledger.write().append_document(doc).map(|s| s.get())
    }
}

pub fn router(server: Arc<SimServer>) -> Router {
    Router::new()
        .route("/txns", get(get_txns).post(post_txn))
        .route("/size", get(get_size))
        .route("/genesis", get(get_genesis))
        .route("/root", get(get_root))
        .with_state(server)
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

fn ndjson(lines: impl Iterator<Item = String>, size: u64) -> Response {
    let mut body = String::new();
    for l in lines {
        body.push_str(&l);
        body.push('\n');
    }
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson"));
    headers.insert(LEDGER_SIZE_HEADER, HeaderValue::from(size));
    (headers, body).into_response()
}

#[derive(Debug, Deserialize)]
struct RangeParams {
    from: Option<String>,
    to: Option<String>,
}

#[allow(clippy::result_large_err)]
fn parse_u64(name: &str, v: Option<&String>) -> Result<u64, Response> {
    let v = v.ok_or_else(|| error(StatusCode::BAD_REQUEST, format!("missing `{name}`")))?;
    v.parse().map_err(|_| {
        error(
            StatusCode::BAD_REQUEST,
            format!("`{name}` must be a non-negative integer"),
        )
    })
}

async fn get_txns(State(s): State<Arc<SimServer>>, Query(p): Query<RangeParams>) -> Response {
    let (from, to) = match (parse_u64("from", p.from.as_ref()), parse_u64("to", p.to.as_ref())) {
        (Ok(f), Ok(t)) => (f, t),
        (Err(e), _) | (_, Err(e)) => return e,
    };
    if from == 0 || from > to {
        return error(StatusCode::BAD_REQUEST, format!("invalid range {from}..={to}"));
    }
    let ledger = s.ledger.read();
    let size = ledger.len();
    if from > size {
        let mut resp = error(
            StatusCode::RANGE_NOT_SATISFIABLE,
            format!("from {from} beyond head {size}"),
        );
        resp.headers_mut().insert(LEDGER_SIZE_HEADER, HeaderValue::from(size));
        return resp;
    }
    let to = to.min(from + s.max_batch - 1);
    ndjson(ledger.range(from, to).iter().map(|t| t.canonical_text()), size)
}

#[derive(Debug, Deserialize)]
struct GenesisParams {
    k: Option<usize>,
}

/// The first `k` NYMs; by default the run of NYMs the ledger starts with.
async fn get_genesis(State(s): State<Arc<SimServer>>, Query(p): Query<GenesisParams>) -> Response {
    let ledger = s.ledger.read();
    let k = p.k.unwrap_or_else(|| {
        ledger
            .txns()
            .iter()
            .take_while(|t| t.txn_type() == TxnType::Nym)
            .count()
    });
    ndjson(ledger.genesis(k).into_iter().map(|t| t.canonical_text()), ledger.len())
}

async fn get_size(State(s): State<Arc<SimServer>>) -> Response {
    Json(json!({ "size": s.len() })).into_response()
}

#[derive(Debug, Deserialize)]
struct RootParams {
    size: Option<String>,
}

async fn get_root(State(s): State<Arc<SimServer>>, Query(p): Query<RootParams>) -> Response {
    let ledger = s.ledger.read();
    let size = match p.size.as_ref() {
        None => ledger.len(),
        Some(_) => match parse_u64("size", p.size.as_ref()) {
            Ok(v) => v,
            Err(e) => return e,
        },
    };
    match ledger.tree().root_at(size) {
        Ok(root) => Json(json!({ "size": size, "root": root })).into_response(),
        Err(e) => error(StatusCode::RANGE_NOT_SATISFIABLE, e.to_string()),
    }
}

async fn post_txn(State(s): State<Arc<SimServer>>, body: axum::body::Bytes) -> Response {
    if !s.mutable {
        return error(
            StatusCode::METHOD_NOT_ALLOWED,
            "ledger is read-only; start the simulator with --mutable",
        );
    }
    let doc: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("body is not JSON: {e}")),
    };
    match s.append(doc) {
        Ok(seq_no) => (StatusCode::CREATED, Json(json!({ "seq_no": seq_no }))).into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}
