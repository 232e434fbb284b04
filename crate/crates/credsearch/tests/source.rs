//! The source client against the simulator and against misbehaving sources.

mod common;

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::routing::get;
use axum::Router;
use common::{spawn, spawn_sim};
use credsearch::source::{RetryPolicy, SourceClient, SourceError};
use credsearch::LEDGER_SIZE_HEADER;
use credsearch_core::sim::{generate, GeneratorConfig};

fn three_txns() -> credsearch_core::sim::SimLedger {
    let cfg = GeneratorConfig {
        n_orgs: 2,
        n_schemas: 0,
        ..GeneratorConfig::default()
    };
    generate(&cfg).unwrap()
}

fn fast_retry(max_attempts: u32) -> RetryPolicy {
    RetryPolicy {
        base_delay: Duration::from_millis(5),
        factor: 2,
        max_attempts,
    }
}

#[tokio::test]
async fn reads_a_full_range() {
    let ledger = three_txns();
    assert_eq!(ledger.len(), 3);
    let expected: Vec<_> = ledger.txns().to_vec();
    let (_, url) = spawn_sim(ledger, false).await;
    let client = SourceClient::new(&url);
    let fetched = client.fetch_range(1, 3).await.unwrap();
    assert_eq!(fetched.head, 3);
    let seqs: Vec<u64> = fetched.txns.iter().map(|t| t.seq_no().get()).collect();
    assert_eq!(seqs, vec![1, 2, 3]);
    for (got, want) in fetched.txns.iter().zip(&expected) {
        assert_eq!(got.canonical_text(), want.canonical_text());
    }
    assert_eq!(client.size().await.unwrap(), 3);
}

#[tokio::test]
async fn range_past_the_head_is_empty() {
    let (_, url) = spawn_sim(three_txns(), false).await;
    let fetched = SourceClient::new(&url).fetch_range(10, 20).await.unwrap();
    assert!(fetched.txns.is_empty());
    assert_eq!(fetched.head, 3);
}

/// A source that answers every range read with seq 1 and seq 3.
fn gappy_source() -> Router {
    let ledger = three_txns();
    let body = [1usize, 3]
        .iter()
        .map(|&s| format!("{}\n", ledger.txns()[s - 1].canonical_text()))
        .collect::<String>();
    Router::new().route(
        "/txns",
        get(move || {
            let body = body.clone();
            async move {
                let mut headers = HeaderMap::new();
                headers.insert(LEDGER_SIZE_HEADER, HeaderValue::from(3u64));
                (headers, body)
            }
        }),
    )
}

#[tokio::test]
async fn gaps_are_detected() {
    let url = spawn(gappy_source()).await;
    let err = SourceClient::new(&url).fetch_range(1, 3).await.unwrap_err();
    assert!(
        matches!(err, SourceError::GapDetected { expected: 2, found: 3 }),
        "{err}"
    );
}

#[tokio::test]
async fn server_errors_are_retried() {
    let calls = Arc::new(AtomicU32::new(0));
    let counter = calls.clone();
    let router = Router::new().route(
        "/size",
        get(move || {
            let n = counter.fetch_add(1, Ordering::SeqCst);
            async move {
                if n < 2 {
                    (StatusCode::SERVICE_UNAVAILABLE, "busy".to_string())
                } else {
                    (StatusCode::OK, "{\"size\":42}".to_string())
                }
            }
        }),
    );
    let url = spawn(router).await;
    let client = SourceClient::with_retry(&url, fast_retry(5));
    assert_eq!(client.size().await.unwrap(), 42);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn gives_up_after_the_attempt_budget() {
    // Bind and drop a listener to get a port nobody listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let client = SourceClient::with_retry(&format!("http://127.0.0.1:{port}"), fast_retry(3));
    match client.fetch_range(1, 10).await {
        Err(SourceError::Unavailable { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("expected Unavailable, got {other:?}"),
    }
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let calls = Arc::new(AtomicU32::new(0));
    let counter = calls.clone();
    let router = Router::new().route(
        "/txns",
        get(move || {
            counter.fetch_add(1, Ordering::SeqCst);
            async { (StatusCode::BAD_REQUEST, "nope") }
        }),
    );
    let url = spawn(router).await;
    let err = SourceClient::with_retry(&url, fast_retry(5))
        .fetch_range(1, 2)
        .await
        .unwrap_err();
    assert!(matches!(err, SourceError::Status { status: 400, .. }), "{err}");
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn roots_are_optional() {
    let ledger = three_txns();
    let root = ledger.root();
    let (_, url) = spawn_sim(ledger, false).await;
    assert_eq!(SourceClient::new(&url).root_at(3).await.unwrap(), Some(root));

    // A source with only the range protocol.
    let url = spawn(gappy_source()).await;
    assert_eq!(SourceClient::new(&url).root_at(3).await.unwrap(), None);
}

#[tokio::test]
async fn missing_size_header_is_malformed() {
    let router = Router::new().route("/txns", get(|| async { "" }));
    let url = spawn(router).await;
    let err = SourceClient::new(&url).fetch_range(1, 2).await.unwrap_err();
    assert!(matches!(err, SourceError::Malformed(_)), "{err}");
}
