//! The load generator against an in-process service.

mod common;

use std::time::{Duration, Instant};

use common::{spawn, state_for};
use credsearch::api::{self, ApiOptions};
use credsearch::bench::{run_bench, BenchConfig, BenchError};
use credsearch_core::sim::{generate, GeneratorConfig};

async fn service_for(corpus: &GeneratorConfig) -> String {
    let state = state_for(&generate(corpus).unwrap());
    spawn(api::router(state, &ApiOptions::default())).await
}

fn quick(url: &str, corpus: GeneratorConfig) -> BenchConfig {
    BenchConfig {
        connections: 4,
        duration: Duration::from_secs(1),
        sample_rate: 1.0,
        ..BenchConfig::new(url, Some(corpus))
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn smoke_run_validates_every_sampled_response() {
    let corpus = GeneratorConfig::default();
    let url = service_for(&corpus).await;
    let started = Instant::now();
    let report = run_bench(&quick(&url, corpus.clone())).await.unwrap();
    assert!(
        started.elapsed() < Duration::from_secs(30),
        "took {:?}",
        started.elapsed()
    );
    report.verdict().unwrap();
    assert_eq!(report.corpus_size, corpus.expected_len() as u64);
    let ids: Vec<u8> = report.classes.iter().map(|c| c.class).collect();
    assert_eq!(ids, vec![1, 2, 3, 4, 5]);
    for c in &report.classes {
        assert!(c.requests > 0, "class {} sent nothing", c.class);
        assert_eq!(c.errors, 0);
        assert!(c.validated > 0);
        assert_eq!(c.mismatches, 0);
        assert!(c.p50_ms <= c.p99_ms);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    report.write_csv(&path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(headers, ["class", "req_per_sec", "p50_ms", "p99_ms"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    for (row, class) in rows.iter().zip(&report.classes) {
        assert_eq!(row[0].parse::<u8>().unwrap(), class.class);
        assert!(row[1].parse::<f64>().unwrap() > 0.0);
    }
    assert!(report.table().lines().count() >= 7);
}

#[tokio::test]
async fn stopped_service_is_unreachable() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let err = run_bench(&quick(&format!("http://127.0.0.1:{port}"), GeneratorConfig::default()))
        .await
        .unwrap_err();
    assert!(matches!(err, BenchError::TargetUnreachable(_)), "{err}");
}

#[tokio::test]
async fn fatal_service_is_unreachable() {
    let state = state_for(&generate(&GeneratorConfig::default()).unwrap());
    state.fail("tampered");
    let url = spawn(api::router(state, &ApiOptions::default())).await;
    let err = run_bench(&quick(&url, GeneratorConfig::default())).await.unwrap_err();
    assert!(matches!(err, BenchError::TargetUnreachable(_)), "{err}");
}

#[tokio::test]
async fn different_corpus_size_is_refused() {
    let url = service_for(&GeneratorConfig::with_count(42, 50)).await;
    let err = run_bench(&quick(&url, GeneratorConfig::default())).await.unwrap_err();
    assert!(matches!(err, BenchError::CorpusMismatch(_)), "{err}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn different_corpus_content_is_a_semantic_mismatch() {
    // Same size, different seed: every count matches but the documents differ.
    let served = GeneratorConfig {
        seed: 1234,
        ..GeneratorConfig::default()
    };
    let url = service_for(&served).await;
    let report = run_bench(&quick(&url, GeneratorConfig::default())).await.unwrap();
    let mismatches: u64 = report.classes.iter().map(|c| c.mismatches).sum();
    assert!(mismatches > 0);
    assert!(matches!(report.verdict(), Err(BenchError::SemanticMismatch { .. })));
}

#[tokio::test]
async fn invalid_configurations_are_rejected() {
    let url = "http://127.0.0.1:9";
    for config in [
        BenchConfig {
            connections: 0,
            ..quick(url, GeneratorConfig::default())
        },
        BenchConfig {
            duration: Duration::from_millis(10),
            ..quick(url, GeneratorConfig::default())
        },
        BenchConfig {
            sample_rate: 1.5,
            ..quick(url, GeneratorConfig::default())
        },
    ] {
        assert!(matches!(run_bench(&config).await, Err(BenchError::InvalidConfig(_))));
    }
}
