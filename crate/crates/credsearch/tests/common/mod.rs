//! Helpers shared by the integration tests: in-process simulator and API
//! servers on ephemeral ports.

#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use axum::Router;
use credsearch::simserver::{self, SimServer, DEFAULT_MAX_BATCH};
use credsearch::state::ServiceState;
use credsearch::sync::{SyncConfig, Syncer};
use credsearch_core::sim::{generate, GeneratorConfig, SimLedger};
use credsearch_core::LocalLedger;
use tokio::net::TcpListener;

/// Serves `router` on 127.0.0.1 with an ephemeral port; returns the base URL.
pub async fn spawn(router: Router) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router).await.unwrap();
    });
    format!("http://{addr}")
}

pub async fn spawn_sim(ledger: SimLedger, mutable: bool) -> (Arc<SimServer>, String) {
    let server = SimServer::new(ledger, mutable, DEFAULT_MAX_BATCH);
    let url = spawn(simserver::router(server.clone())).await;
    (server, url)
}

/// The default generated corpus: the fixture NYM, 20 organisations, 30
/// schemas with two credential definitions each.
pub fn small_corpus() -> SimLedger {
    generate(&GeneratorConfig::default()).unwrap()
}

pub fn corpus_of(seed: u64, count: usize) -> SimLedger {
    generate(&GeneratorConfig::with_count(seed, count)).unwrap()
}

pub fn sync_config(url: &str, batch_size: u64) -> SyncConfig {
    SyncConfig {
        batch_size,
        poll_interval: Duration::from_millis(50),
        ..SyncConfig::new(url)
    }
}

/// Syncs an in-memory copy to the head of the source at `url`.
pub async fn synced_state(url: &str) -> Arc<ServiceState> {
    let state = Arc::new(ServiceState::new(url));
    let syncer = Syncer::new(LocalLedger::in_memory(), sync_config(url, 1000), state.clone());
    syncer.run(true, std::future::pending()).await.unwrap();
    state
}

/// A service state built directly from a ledger, without HTTP.
pub fn state_for(ledger: &SimLedger) -> Arc<ServiceState> {
    let mut local = LocalLedger::in_memory();
    let batch = local.verify_and_append(ledger.txns()).unwrap();
    Arc::new(ServiceState::recovered("http://source.invalid", batch.docs, local.tree().clone()).unwrap())
}

pub fn client() -> reqwest::Client {
    reqwest::Client::new()
}
