//! The credsearch service: an HTTP ledger simulator, the sync loop keeping a
//! verified local copy, the search API on top of it, and a load generator.

pub mod api;
pub mod bench;
pub mod simserver;
pub mod source;
pub mod state;
pub mod sync;

/// Response header carrying the source ledger's size.
pub const LEDGER_SIZE_HEADER: &str = "x-ledger-size";
