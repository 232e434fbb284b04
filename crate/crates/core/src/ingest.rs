//! The verified local ledger copy and the enrichment pipeline feeding the
//! index.
//!
//! [`LocalLedger`] is the single writer: it appends envelopes to the Merkle
//! tree and the durable copy, keeps the schema table and alias directory, and
//! hands back the documents the index has to add or re-enrich.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::enrich::{enrich, AliasDirectory, EnrichedDoc};
use crate::index::{IndexError, InvertedIndex};
use crate::ledger::{classify, parse_txn, Did, LedgerEntry, Opaque, Payload, SchemaData, SeqNo, TxnEnvelope};
use crate::merkle::{leaf_hash, Digest, MerkleTree, RootHash};
use crate::store::{Checkpoint, LedgerCopy};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("expected seqNo {expected}, got {found}")]
    SequenceMismatch { expected: u64, found: u64 },
    #[error("ledger copy failed verification: {0}")]
    VerificationFailure(String),
    #[error("persisting the ledger copy failed after {} transactions: {source}", .applied.docs.len())]
    PersistenceFailure {
        #[source]
        source: io::Error,
        /// Transactions that were made durable before the failure.
        applied: Box<IngestBatch>,
    },
    #[error("opening ledger copy: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerHead {
    pub last_seq: u64,
    pub root: RootHash,
}

/// Index work resulting from one append.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestBatch {
    /// New documents, in sequence order.
    pub docs: Vec<EnrichedDoc>,
    /// Already indexed documents whose author alias changed.
    pub realias: Vec<(SeqNo, Option<String>)>,
    pub leaf_hashes: Vec<Digest>,
}

impl IngestBatch {
    pub fn is_empty(&self) -> bool {
        self.docs.is_empty() && self.realias.is_empty()
    }

    /// Adds the new documents, then re-enriches the realiased ones.
    pub fn apply_to(&self, index: &mut InvertedIndex) -> Result<(), IndexError> {
        for doc in &self.docs {
            index.add_document(doc.clone())?;
        }
        for (seq, alias) in &self.realias {
            let mut doc = index.remove_document(*seq)?;
            doc.author_alias = alias.clone();
            index.add_document(doc)?;
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct LocalLedger {
    store: Option<LedgerCopy>,
    tree: MerkleTree,
    aliases: AliasDirectory,
    schemas: HashMap<SeqNo, SchemaData>,
    authored: HashMap<Did, Vec<SeqNo>>,
}

/// Result of recovering a ledger copy from disk.
#[derive(Debug)]
pub struct Opened {
    pub ledger: LocalLedger,
    /// Every document, fully enriched, in sequence order.
    pub docs: Vec<EnrichedDoc>,
    /// Transactions past the last checkpoint that were kept.
    pub unverified_tail: u64,
}

impl LocalLedger {
    /// A ledger with no durable backing.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the copy in `dir` and re-verifies every transaction: each line
    /// must be a canonical document with the next seqNo, and the recomputed
    /// root must match the checkpoint.
    pub fn open(dir: impl AsRef<Path>) -> Result<Opened, IngestError> {
        let (store, recovered) = LedgerCopy::open(dir).map_err(|e| match e.kind() {
            io::ErrorKind::InvalidData => IngestError::VerificationFailure(e.to_string()),
            _ => IngestError::Io(e),
        })?;
        let mut ledger = LocalLedger {
            store: None,
            ..Default::default()
        };
        let mut docs = Vec::with_capacity(recovered.lines.len());
        for (i, line) in recovered.lines.iter().enumerate() {
            let expected = i as u64 + 1;
            let env = parse_txn(line).map_err(|e| IngestError::VerificationFailure(format!("line {expected}: {e}")))?;
            if env.seq_no().get() != expected {
                return Err(IngestError::VerificationFailure(format!(
                    "line {expected} carries seqNo {}",
                    env.seq_no()
                )));
            }
            if env.canonical_text() != *line {
                return Err(IngestError::VerificationFailure(format!(
                    "line {expected} is not canonical"
                )));
            }
            ledger.ingest_one(&env, line, &mut docs, 1, &mut BTreeMap::new());
        }
        let count = ledger.tree.leaf_count();
        if let Some(cp) = recovered.checkpoint {
            if cp.last_seq > count {
                return Err(IngestError::VerificationFailure(format!(
                    "checkpoint at {} but only {count} transactions on disk",
                    cp.last_seq
                )));
            }
            let root = ledger.tree.root_at(cp.last_seq).expect("size checked");
            if root != cp.root {
                return Err(IngestError::VerificationFailure(format!(
                    "root mismatch at {}: checkpoint {} recomputed {}",
                    cp.last_seq, cp.root, root
                )));
            }
        }
        let unverified_tail = count - recovered.checkpoint.map_or(0, |c| c.last_seq);
        ledger.store = Some(store);
        Ok(Opened {
            ledger,
            docs,
            unverified_tail,
        })
    }

    pub fn head(&self) -> LedgerHead {
        LedgerHead {
            last_seq: self.tree.leaf_count(),
            root: self.tree.root(),
        }
    }

    pub fn last_seq(&self) -> u64 {
        self.tree.leaf_count()
    }

    pub fn tree(&self) -> &MerkleTree {
        &self.tree
    }

    pub fn aliases(&self) -> &AliasDirectory {
        &self.aliases
    }

    pub fn schema(&self, seq_no: SeqNo) -> Option<&SchemaData> {
        self.schemas.get(&seq_no)
    }

    /// Root the tree would have after appending `envs`, without appending.
    pub fn preview_root(&self, envs: &[TxnEnvelope]) -> RootHash {
        let mut tree = self.tree.clone();
        for env in envs {
            tree.push_leaf_hash(leaf_hash(env.canonical_text().as_bytes()));
        }
        tree.root()
    }

    pub fn verify_and_append(&mut self, envs: &[TxnEnvelope]) -> Result<IngestBatch, IngestError> {
        let start = self.last_seq() + 1;
        for (i, env) in envs.iter().enumerate() {
            let expected = start + i as u64;
            if env.seq_no().get() != expected {
                return Err(IngestError::SequenceMismatch {
                    expected,
                    found: env.seq_no().get(),
                });
            }
        }
        let mut docs = Vec::with_capacity(envs.len());
        let mut realias = BTreeMap::new();
        let mut leaf_hashes = Vec::with_capacity(envs.len());
        for env in envs {
            let canonical = env.canonical_text();
            if let Some(store) = self.store.as_mut() {
                if let Err(source) = store.append_line(&canonical) {
                    return Err(IngestError::PersistenceFailure {
                        source,
                        applied: Box::new(IngestBatch {
                            docs,
                            realias: realias.into_iter().collect(),
                            leaf_hashes,
                        }),
                    });
                }
            }
            leaf_hashes.push(self.ingest_one(env, &canonical, &mut docs, start, &mut realias));
        }
        let batch = IngestBatch {
            docs,
            realias: realias.into_iter().collect(),
            leaf_hashes,
        };
        if !envs.is_empty() {
            if let Some(store) = self.store.as_mut() {
                let head = LedgerHead {
                    last_seq: self.tree.leaf_count(),
                    root: self.tree.root(),
                };
                let persisted = store.sync().and_then(|_| {
                    store.write_checkpoint(&Checkpoint {
                        last_seq: head.last_seq,
                        root: head.root,
                    })
                });
                if let Err(source) = persisted {
                    return Err(IngestError::PersistenceFailure {
                        source,
                        applied: Box::new(batch),
                    });
                }
            }
        }
        Ok(batch)
    }

    /// Appends one transaction that is already durable (or has no store) and
    /// produces its document. `docs` holds this batch's documents, the first
    /// of which has seqNo `batch_start`.
    fn ingest_one(
        &mut self,
        env: &TxnEnvelope,
        canonical: &str,
        docs: &mut Vec<EnrichedDoc>,
        batch_start: u64,
        realias: &mut BTreeMap<SeqNo, Option<String>>,
    ) -> Digest {
        let hash = leaf_hash(canonical.as_bytes());
        self.tree.push_leaf_hash(hash);

        let entry = classify(env.clone()).unwrap_or_else(|e| {
            tracing::warn!(seq_no = %env.seq_no(), error = %e, "indexing transaction as opaque");
            let data = env.document().get("txn").and_then(|t| t.get("data")).cloned();
            LedgerEntry {
                envelope: env.clone(),
                payload: Payload::Other(Opaque(data.unwrap_or_default())),
            }
        });
        if let Payload::Schema(s) = &entry.payload {
            self.schemas.insert(env.seq_no(), s.clone());
        }
        if let Some(did) = self.aliases.observe(&entry) {
            let alias = self.aliases.alias(&did).map(str::to_string);
            for seq in self.authored.get(&did).into_iter().flatten() {
                if seq.get() >= batch_start {
                    docs[(seq.get() - batch_start) as usize].author_alias = alias.clone();
                } else {
                    realias.insert(*seq, alias.clone());
                }
            }
        }
        let doc = enrich(&entry, &self.schemas, &self.aliases);
        self.authored
            .entry(doc.author_did.clone())
            .or_default()
            .push(doc.seq_no);
        docs.push(doc);
        hash
    }
}
