//! The poll loop: catch up with back-to-back range reads, then poll at the
//! configured interval. Every batch is checked against the source's Merkle
//! root before it is persisted; any disagreement halts the loop for good.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use credsearch_core::index::IndexError;
use credsearch_core::ingest::{IngestError, LocalLedger};
use credsearch_core::merkle::RootHash;
use thiserror::Error;

use crate::source::{SourceClient, SourceError};
use crate::state::{ServiceState, SyncPhase};

pub const DEFAULT_POLL_INTERVAL: Duration = Duration::from_secs(10);
pub const DEFAULT_BATCH_SIZE: u64 = 1000;

#[derive(Debug, Clone)]
pub struct SyncConfig {
    pub source_url: String,
    pub poll_interval: Duration,
    pub batch_size: u64,
}

impl SyncConfig {
    pub fn new(source_url: impl Into<String>) -> Self {
        Self {
            source_url: source_url.into(),
            poll_interval: DEFAULT_POLL_INTERVAL,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

/// Position of the local copy relative to its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncState {
    pub last_seq: u64,
    pub root: RootHash,
    pub source_url: String,
    pub poll_interval: Duration,
}

#[derive(Debug, Error)]
pub enum SyncError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("index rejected a batch: {0}")]
    Index(#[from] IndexError),
}

impl SyncError {
    /// Whether the loop must stop rather than retry.
    pub fn is_fatal(&self) -> bool {
        match self {
            SyncError::Verification(_) | SyncError::Index(_) => true,
            SyncError::Ingest(e) => matches!(e, IngestError::VerificationFailure(_)),
            SyncError::Source(_) => false,
        }
    }
}

/// Outcome of one poll.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub appended: u64,
    pub head: u64,
}

pub struct Syncer {
    ledger: LocalLedger,
    client: SourceClient,
    config: SyncConfig,
    state: Arc<ServiceState>,
}

impl Syncer {
    pub fn new(ledger: LocalLedger, config: SyncConfig, state: Arc<ServiceState>) -> Self {
        let client = SourceClient::new(&config.source_url);
        Self::with_client(ledger, client, config, state)
    }

    pub fn with_client(
        ledger: LocalLedger,
        client: SourceClient,
        config: SyncConfig,
        state: Arc<ServiceState>,
    ) -> Self {
        Self {
            ledger,
            client,
            config,
            state,
        }
    }

    pub fn sync_state(&self) -> SyncState {
        let head = self.ledger.head();
        SyncState {
            last_seq: head.last_seq,
            root: head.root,
            source_url: self.config.source_url.clone(),
            poll_interval: self.config.poll_interval,
        }
    }

    pub fn ledger(&self) -> &LocalLedger {
        &self.ledger
    }

    async fn check_root(&self, size: u64, expected: RootHash) -> Result<(), SyncError> {
        if let Some(remote) = self.client.root_at(size).await? {
            if remote != expected {
                return Err(SyncError::Verification(format!(
                    "source root at size {size} is {remote}, local copy computes {expected}"
                )));
            }
        }
        Ok(())
    }

    /// Fetches at most one batch, verifies it, persists it and hands it to the
    /// index.
    pub async fn step(&mut self) -> Result<Step, SyncError> {
        let last = self.ledger.last_seq();
        let fetched = self.client.fetch_range(last + 1, last + self.config.batch_size).await?;
        if fetched.head < last {
            return Err(SyncError::Verification(format!(
                "source head {} is behind the local copy at {last}",
                fetched.head
            )));
        }
        if fetched.txns.is_empty() {
            if last > 0 {
                self.check_root(last, self.ledger.head().root).await?;
            }
            return Ok(Step {
                appended: 0,
                head: fetched.head,
            });
        }
        let new_size = last + fetched.txns.len() as u64;
        self.check_root(new_size, self.ledger.preview_root(&fetched.txns))
            .await?;
        let batch = match self.ledger.verify_and_append(&fetched.txns) {
            Ok(batch) => batch,
            Err(IngestError::PersistenceFailure { source, applied }) => {
                // What reached the disk is part of the copy; index it before
                // reporting the failure.
                self.state.apply(&applied)?;
                return Err(IngestError::PersistenceFailure { source, applied }.into());
            }
            Err(e) => return Err(e.into()),
        };
        self.state.apply(&batch)?;
        Ok(Step {
            appended: new_size - last,
            head: fetched.head,
        })
    }

    /// Runs until `shutdown` resolves or verification fails. With
    /// `exit_when_current`, returns as soon as the copy has reached the head.
    pub async fn run(
        mut self,
        exit_when_current: bool,
        shutdown: impl Future<Output = ()>,
    ) -> Result<SyncState, SyncError> {
        tokio::pin!(shutdown);
        loop {
            let wait = match self.step().await {
                Ok(step) if self.ledger.last_seq() < step.head => {
                    self.state.set_phase(SyncPhase::CatchingUp);
                    Duration::ZERO
                }
                Ok(step) => {
                    if self.state.phase() != SyncPhase::Steady {
                        tracing::info!(last_seq = self.ledger.last_seq(), "ledger copy is current");
                    }
                    if step.appended > 0 {
                        tracing::info!(appended = step.appended, last_seq = self.ledger.last_seq(), "ingested");
                    }
                    self.state.set_phase(SyncPhase::Steady);
                    if exit_when_current {
                        return Ok(self.sync_state());
                    }
                    self.config.poll_interval
                }
                Err(e) if e.is_fatal() => {
                    tracing::error!(error = %e, "halting sync");
                    self.state.fail(e.to_string());
                    return Err(e);
                }
                Err(e) => {
                    tracing::warn!(error = %e, "sync step failed; will retry");
                    self.config.poll_interval
                }
            };
            tokio::select! {
                _ = &mut shutdown => return Ok(self.sync_state()),
                _ = tokio::time::sleep(wait) => {}
            }
        }
    }
}
