//! Read-only REST API over the service state: `/search`, `/txn/{seq_no}`,
//! `/stats` and `/health`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use credsearch_core::enrich::EnrichedDoc;
use credsearch_core::index::{self, IndexError, ScoredHit};
use credsearch_core::ledger::{Did, SeqNo, TxnType};
use credsearch_core::merkle::{AuditPath, RootHash};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::state::{ServiceState, Snapshot, SyncPhase};

#[derive(Debug, Clone, Default)]
pub struct ApiOptions {
    pub cors: bool,
    /// Directory of static UI assets served at `/`.
    pub ui_dir: Option<PathBuf>,
}

pub fn router(state: Arc<ServiceState>, options: &ApiOptions) -> Router {
    let mut app = Router::new()
        .route("/search", get(search))
        .route("/txn/{seq_no}", get(txn))
        .route("/stats", get(stats))
        .route("/health", get(health))
        .with_state(state);
    if let Some(dir) = &options.ui_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    if options.cors {
        app = app.layer(CorsLayer::permissive());
    }
    app
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Unavailable(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Unavailable(m) => (StatusCode::SERVICE_UNAVAILABLE, m),
        };
        (status, Json(json!({ "error": msg }))).into_response()
    }
}

impl From<IndexError> for ApiError {
    fn from(e: IndexError) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

fn serving(s: &Snapshot) -> Result<(), ApiError> {
    match s.phase {
        SyncPhase::Fatal => Err(ApiError::Unavailable(format!(
            "ledger copy failed verification: {}",
            s.fatal_reason.as_deref().unwrap_or("unknown reason")
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    #[serde(rename = "type")]
    pub txn_type: Option<String>,
    pub limit: Option<String>,
    pub offset: Option<String>,
    /// Experimental exact author DID filter.
    pub author: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub seq_no: SeqNo,
    pub score: f64,
    pub txn_type: TxnType,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schema_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schema_version: Option<String>,
    pub attr_names: Vec<String>,
    pub author_did: Did,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub author_alias: Option<String>,
    /// Index terms the query matched, in query order.
    pub highlight: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub total: usize,
    pub took_ms: u64,
    pub hits: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enrichment {
    pub txn_type: TxnType,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schema_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schema_version: Option<String>,
    pub attr_names: Vec<String>,
    pub author_did: Did,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub author_alias: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ref_schema_seq: Option<SeqNo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub txn_time: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxnResponse {
    pub seq_no: SeqNo,
    /// Canonical text of the transaction: the exact Merkle leaf bytes.
    pub raw: String,
    pub enrichment: Enrichment,
    pub audit_path: AuditPath,
    pub root_hash: RootHash,
    pub tree_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    pub last_seq: u64,
    pub root_hash: RootHash,
    pub doc_count: usize,
    pub sync_phase: SyncPhase,
    pub source_url: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fatal_reason: Option<String>,
}

/// Turns raw request parameters into an index query.
pub fn parse_search(p: &SearchParams) -> Result<index::Query, ApiError> {
    let q = p.q.as_deref().unwrap_or("");
    let mut query = index::Query::new(q);
    if let Some(types) = p.txn_type.as_deref() {
        let mut set = BTreeSet::new();
        let mut any = false;
        for name in types.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if name == "any" {
                any = true;
            } else {
                let t = TxnType::from_param_name(name).ok_or_else(|| {
                    ApiError::BadRequest(format!(
                        "unknown type `{name}`; expected nym, schema, claim_def, attrib, other or any"
                    ))
                })?;
                set.insert(t);
            }
        }
        if !any && !set.is_empty() {
            query.type_filter = Some(set);
        }
    }
    let number = |name: &str, v: Option<&str>| -> Result<Option<usize>, ApiError> {
        v.map(|v| {
            v.parse()
                .map_err(|_| ApiError::BadRequest(format!("`{name}` must be a non-negative integer")))
        })
        .transpose()
    };
    if let Some(limit) = number("limit", p.limit.as_deref())? {
        query.limit = limit;
    }
    if let Some(offset) = number("offset", p.offset.as_deref())? {
        query.offset = offset;
    }
    if let Some(author) = p.author.as_deref() {
        query.author = Some(Did::parse(author).map_err(|e| ApiError::BadRequest(e.to_string()))?);
    }
    // Surface empty queries and bad limits before touching the index.
    query.terms()?;
    Ok(query)
}

pub fn to_hit(hit: &ScoredHit, doc: &EnrichedDoc) -> SearchHit {
    let mut highlight: Vec<String> = Vec::with_capacity(hit.matched_terms.len());
    for m in &hit.matched_terms {
        if !highlight.contains(&m.index_term) {
            highlight.push(m.index_term.clone());
        }
    }
    SearchHit {
        seq_no: hit.seq_no,
        score: hit.score,
        txn_type: doc.txn_type,
        schema_name: doc.schema_name.clone(),
        schema_version: doc.schema_version.clone(),
        attr_names: doc.attr_names.clone(),
        author_did: doc.author_did.clone(),
        author_alias: doc.author_alias.clone(),
        highlight,
    }
}

async fn search(
    State(state): State<Arc<ServiceState>>,
    Query(p): Query<SearchParams>,
) -> Result<Json<SearchResponse>, ApiError> {
    let started = Instant::now();
    let query = parse_search(&p)?;
    let snap = state.read();
    serving(&snap)?;
    let results = snap.index.search(&query, state.weights())?;
    let hits = results
        .hits
        .iter()
        .map(|h| to_hit(h, snap.index.get(h.seq_no).expect("hits refer to indexed documents")))
        .collect();
    drop(snap);
    Ok(Json(SearchResponse {
        total: results.total,
        took_ms: started.elapsed().as_millis() as u64,
        hits,
    }))
}

async fn txn(
    State(state): State<Arc<ServiceState>>,
    Path(raw_seq): Path<String>,
) -> Result<Json<TxnResponse>, ApiError> {
    let not_found = || ApiError::NotFound(format!("no transaction {raw_seq}"));
    let seq_no = raw_seq
        .parse::<u64>()
        .ok()
        .and_then(|n| SeqNo::new(n).ok())
        .ok_or_else(not_found)?;
    let snap = state.read();
    serving(&snap)?;
    let doc = snap.index.get(seq_no).ok_or_else(not_found)?;
    let audit_path = snap.tree.audit_path(seq_no.leaf_index()).map_err(|_| not_found())?;
    Ok(Json(TxnResponse {
        seq_no,
        raw: doc.raw.clone(),
        enrichment: Enrichment {
            txn_type: doc.txn_type,
            schema_name: doc.schema_name.clone(),
            schema_version: doc.schema_version.clone(),
            attr_names: doc.attr_names.clone(),
            author_did: doc.author_did.clone(),
            author_alias: doc.author_alias.clone(),
            ref_schema_seq: doc.ref_schema_seq,
            txn_time: doc.txn_time,
        },
        audit_path,
        root_hash: snap.tree.root(),
        tree_size: snap.tree.leaf_count(),
    }))
}

async fn stats(State(state): State<Arc<ServiceState>>) -> Json<StatsResponse> {
    let snap = state.read();
    Json(StatsResponse {
        last_seq: snap.tree.leaf_count(),
        root_hash: snap.tree.root(),
        doc_count: snap.index.doc_count(),
        sync_phase: snap.phase,
        source_url: state.source_url().to_string(),
        fatal_reason: snap.fatal_reason.clone(),
    })
}

async fn health() -> &'static str {
    "ok"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(q: &str, t: Option<&str>, limit: Option<&str>) -> SearchParams {
        SearchParams {
            q: Some(q.into()),
            txn_type: t.map(Into::into),
            limit: limit.map(Into::into),
            ..Default::default()
        }
    }

    #[test]
    fn type_lists() {
        let q = parse_search(&params("x1", Some("schema,claim_def"), None)).unwrap();
        assert_eq!(
            q.type_filter.unwrap().into_iter().collect::<Vec<_>>(),
            vec![TxnType::Schema, TxnType::ClaimDef]
        );
        assert!(parse_search(&params("x1", Some("any"), None))
            .unwrap()
            .type_filter
            .is_none());
        assert!(parse_search(&params("x1", Some("nym,any"), None))
            .unwrap()
            .type_filter
            .is_none());
        assert!(matches!(
            parse_search(&params("x1", Some("bogus"), None)),
            Err(ApiError::BadRequest(_))
        ));
    }

    #[test]
    fn limits() {
        assert_eq!(parse_search(&params("x1", None, None)).unwrap().limit, 10);
        assert_eq!(parse_search(&params("x1", None, Some("1000"))).unwrap().limit, 1000);
        for bad in ["0", "1001", "-1", "ten"] {
            assert!(
                matches!(
                    parse_search(&params("x1", None, Some(bad))),
                    Err(ApiError::BadRequest(_))
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn empty_queries() {
        for q in ["", "   ", "a b", "-"] {
            assert!(
                matches!(parse_search(&params(q, None, None)), Err(ApiError::BadRequest(_))),
                "{q:?}"
            );
        }
        assert!(matches!(
            parse_search(&SearchParams::default()),
            Err(ApiError::BadRequest(_))
        ));
    }
}
