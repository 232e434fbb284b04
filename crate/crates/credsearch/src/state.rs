//! What the query API reads: the index and Merkle tree as of the last applied
//! batch, plus the sync phase.
//!
//! The sync loop applies each batch under the write lock, so a reader sees
//! the state either before or after a batch, never part of one.

use std::fmt;

use credsearch_core::enrich::EnrichedDoc;
use credsearch_core::index::{FieldWeights, IndexError, InvertedIndex};
use credsearch_core::ingest::IngestBatch;
use credsearch_core::merkle::MerkleTree;
use parking_lot::{RwLock, RwLockReadGuard};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncPhase {
    CatchingUp,
    Steady,
    Fatal,
}

impl fmt::Display for SyncPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyncPhase::CatchingUp => "catching_up",
            SyncPhase::Steady => "steady",
            SyncPhase::Fatal => "fatal",
        })
    }
}

#[derive(Debug)]
pub struct Snapshot {
    pub index: InvertedIndex,
    pub tree: MerkleTree,
    pub phase: SyncPhase,
    pub fatal_reason: Option<String>,
}

#[derive(Debug)]
pub struct ServiceState {
    snapshot: RwLock<Snapshot>,
    source_url: String,
    weights: FieldWeights,
}

impl ServiceState {
    pub fn new(source_url: impl Into<String>) -> Self {
        Self::from_parts(source_url, InvertedIndex::new(), MerkleTree::new())
    }

    pub fn from_parts(source_url: impl Into<String>, index: InvertedIndex, tree: MerkleTree) -> Self {
        Self {
            snapshot: RwLock::new(Snapshot {
                index,
                tree,
                phase: SyncPhase::CatchingUp,
                fatal_reason: None,
            }),
            source_url: source_url.into(),
            weights: FieldWeights::default(),
        }
    }

    /// Builds the state from documents recovered from the ledger copy.
    pub fn recovered(
        source_url: impl Into<String>,
        docs: Vec<EnrichedDoc>,
        tree: MerkleTree,
    ) -> Result<Self, IndexError> {
        let mut index = InvertedIndex::new();
        for doc in docs {
            index.add_document(doc)?;
        }
        Ok(Self::from_parts(source_url, index, tree))
    }

    /// A state that refuses to serve, e.g. after the ledger copy failed
    /// verification on startup.
    pub fn failed(source_url: impl Into<String>, reason: impl Into<String>) -> Self {
        let state = Self::new(source_url);
        state.fail(reason);
        state
    }

    pub fn source_url(&self) -> &str {
        &self.source_url
    }

    pub fn weights(&self) -> &FieldWeights {
        &self.weights
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Snapshot> {
        self.snapshot.read()
    }

    pub fn phase(&self) -> SyncPhase {
        self.snapshot.read().phase
    }

    pub fn set_phase(&self, phase: SyncPhase) {
        let mut s = self.snapshot.write();
        if s.phase != SyncPhase::Fatal {
            s.phase = phase;
        }
    }

    /// Enters the fatal phase; it is never left.
    pub fn fail(&self, reason: impl Into<String>) {
        let mut s = self.snapshot.write();
        s.phase = SyncPhase::Fatal;
        s.fatal_reason = Some(reason.into());
    }

    /// Applies one ingested batch atomically with respect to readers.
    pub fn apply(&self, batch: &IngestBatch) -> Result<(), IndexError> {
        let mut s = self.snapshot.write();
        batch.apply_to(&mut s.index)?;
        for h in &batch.leaf_hashes {
            s.tree.push_leaf_hash(*h);
        }
        Ok(())
    }
}
