//! Core of credsearch: the Indy ledger data model, RFC 6962 Merkle trees, a
//! deterministic synthetic ledger, the verified local copy with its
//! enrichment pipeline, and the fuzzy BM25 index.

pub mod enrich;
pub mod index;
pub mod ingest;
pub mod ledger;
pub mod merkle;
pub mod sim;
pub mod store;

pub use enrich::{AliasDirectory, EnrichedDoc};
pub use index::{FieldWeights, InvertedIndex, Query, ScoredHit, SearchResults};
pub use ingest::{IngestBatch, IngestError, LedgerHead, LocalLedger};
pub use ledger::{Did, LedgerError, SeqNo, TxnEnvelope, TxnType};
pub use merkle::{Digest, MerkleTree, RootHash};
