//! Join-enriched search documents.
//!
//! CLAIM_DEF transactions only carry the sequence number of the SCHEMA they
//! are built on, and no transaction other than a NYM carries a human readable
//! name for its author. [`enrich`] joins both in so that a credential
//! definition can be found by its schema's name, attributes and issuer alias.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ledger::{Did, LedgerEntry, Payload, SchemaData, SeqNo, TxnType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedDoc {
    pub seq_no: SeqNo,
    pub txn_type: TxnType,
    pub schema_name: Option<String>,
    pub schema_version: Option<String>,
    pub attr_names: Vec<String>,
    pub author_did: Did,
    pub author_alias: Option<String>,
    pub ref_schema_seq: Option<SeqNo>,
    pub txn_time: Option<u64>,
    /// Canonical text of the transaction.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasRecord {
    pub alias: String,
    pub defined_at: SeqNo,
}

/// Latest alias per DID. A NYM without an alias leaves the entry unchanged.
#[derive(Debug, Clone, Default)]
pub struct AliasDirectory {
    entries: HashMap<Did, AliasRecord>,
}

impl AliasDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, did: &Did) -> Option<&AliasRecord> {
        self.entries.get(did)
    }

    pub fn alias(&self, did: &Did) -> Option<&str> {
        self.entries.get(did).map(|r| r.alias.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records `alias` for `did` if `seq_no` is newer than what is stored.
    /// Returns `true` when the visible alias changed.
    pub fn record(&mut self, did: Did, alias: String, seq_no: SeqNo) -> bool {
        match self.entries.get_mut(&did) {
            Some(existing) if existing.defined_at >= seq_no => false,
            Some(existing) => {
                let changed = existing.alias != alias;
                *existing = AliasRecord {
                    alias,
                    defined_at: seq_no,
                };
                changed
            }
            None => {
                self.entries.insert(
                    did,
                    AliasRecord {
                        alias,
                        defined_at: seq_no,
                    },
                );
                true
            }
        }
    }

    /// Applies a NYM entry; returns the DID whose alias changed, if any.
    pub fn observe(&mut self, entry: &LedgerEntry) -> Option<Did> {
        if let Payload::Nym(nym) = &entry.payload {
            if let Some(alias) = &nym.alias {
                if self.record(nym.dest.clone(), alias.clone(), entry.envelope.seq_no()) {
                    return Some(nym.dest.clone());
                }
            }
        }
        None
    }
}

/// Anything that can resolve a schema by its sequence number.
pub trait SchemaLookup {
    fn schema(&self, seq_no: SeqNo) -> Option<&SchemaData>;
}

impl SchemaLookup for HashMap<SeqNo, SchemaData> {
    fn schema(&self, seq_no: SeqNo) -> Option<&SchemaData> {
        self.get(&seq_no)
    }
}

impl SchemaLookup for std::collections::BTreeMap<SeqNo, SchemaData> {
    fn schema(&self, seq_no: SeqNo) -> Option<&SchemaData> {
        self.get(&seq_no)
    }
}

pub fn enrich(entry: &LedgerEntry, schemas: &impl SchemaLookup, aliases: &AliasDirectory) -> EnrichedDoc {
    let env = &entry.envelope;
    let mut doc = EnrichedDoc {
        seq_no: env.seq_no(),
        txn_type: entry.payload.txn_type(),
        schema_name: None,
        schema_version: None,
        attr_names: Vec::new(),
        author_did: env.author_did().clone(),
        author_alias: aliases.alias(env.author_did()).map(str::to_string),
        ref_schema_seq: None,
        txn_time: env.txn_time(),
        raw: env.canonical_text(),
    };
    match &entry.payload {
        Payload::Schema(s) => {
            doc.schema_name = Some(s.name.clone());
            doc.schema_version = Some(s.version.clone());
            doc.attr_names = s.attr_names.clone();
        }
        Payload::ClaimDef(c) => {
            doc.ref_schema_seq = Some(c.schema_ref);
            if let Some(s) = schemas.schema(c.schema_ref) {
                doc.schema_name = Some(s.name.clone());
                doc.schema_version = Some(s.version.clone());
                doc.attr_names = s.attr_names.clone();
            }
        }
        Payload::Nym(_) | Payload::Attrib(_) | Payload::Other(_) => {}
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{classify, parse_txn};
    use serde_json::json;

    const ISSUER: &str = "V4SGRU86Z58d6TV7PBUe6f";

    fn entry(seq: u64, kind: &str, data: serde_json::Value, from: &str) -> LedgerEntry {
        let doc = json!({
            "txn": {"type": kind, "data": data, "metadata": {"from": from}},
            "txnMetadata": {"seqNo": seq, "txnTime": 1_600_000_000u64 + seq}
        });
        classify(parse_txn(&doc.to_string()).unwrap()).unwrap()
    }

    fn id_card() -> SchemaData {
        SchemaData {
            name: "ID card".into(),
            version: "1.0".into(),
            attr_names: vec!["name".into(), "date_of_birth".into()],
        }
    }

    #[test]
    fn claim_def_joins_schema() {
        let mut schemas = HashMap::new();
        schemas.insert(SeqNo::new(5).unwrap(), id_card());
        let cd = entry(8, "102", json!({"ref": 5, "signature_type": "CL", "tag": "t"}), ISSUER);
        let doc = enrich(&cd, &schemas, &AliasDirectory::new());
        assert_eq!(doc.txn_type, TxnType::ClaimDef);
        assert_eq!(doc.schema_name.as_deref(), Some("ID card"));
        assert_eq!(doc.schema_version.as_deref(), Some("1.0"));
        assert_eq!(doc.attr_names, vec!["name", "date_of_birth"]);
        assert_eq!(doc.ref_schema_seq.map(SeqNo::get), Some(5));
        assert_eq!(doc.txn_time, Some(1_600_000_008));
    }

    #[test]
    fn dangling_reference_is_tolerated() {
        let schemas: HashMap<SeqNo, SchemaData> = HashMap::new();
        let cd = entry(8, "102", json!({"ref": 7}), ISSUER);
        let doc = enrich(&cd, &schemas, &AliasDirectory::new());
        assert_eq!(doc.schema_name, None);
        assert!(doc.attr_names.is_empty());
        assert_eq!(doc.ref_schema_seq.map(SeqNo::get), Some(7));
    }

    #[test]
    fn author_alias_is_joined() {
        let mut aliases = AliasDirectory::new();
        let nym = entry(
            2,
            "1",
            json!({"dest": ISSUER, "alias": "Desert Schools Credit Union"}),
            "Th7MpTaRZVRYnPiabds81Y",
        );
        assert_eq!(aliases.observe(&nym).map(|d| d.to_string()), Some(ISSUER.to_string()));
        let schema = entry(
            3,
            "101",
            json!({"data": {"name": "proof of employment", "version": "1.0", "attr_names": ["name", "company", "title"]}}),
            ISSUER,
        );
        let doc = enrich(&schema, &HashMap::new(), &aliases);
        assert_eq!(doc.author_alias.as_deref(), Some("Desert Schools Credit Union"));
        assert_eq!(doc.schema_name.as_deref(), Some("proof of employment"));
        assert_eq!(doc.ref_schema_seq, None);

        let nym_doc = enrich(&nym, &HashMap::new(), &aliases);
        assert_eq!(nym_doc.schema_name, None);
        assert_eq!(nym_doc.author_alias, None);
    }

    #[test]
    fn alias_latest_wins() {
        let mut aliases = AliasDirectory::new();
        let did = Did::parse(ISSUER).unwrap();
        let s = |n| SeqNo::new(n).unwrap();
        assert!(aliases.record(did.clone(), "Old Name".into(), s(3)));
        assert!(aliases.record(did.clone(), "New Name".into(), s(9)));
        assert!(!aliases.record(did.clone(), "Stale".into(), s(5)));
        assert!(!aliases.record(did.clone(), "New Name".into(), s(12)));
        let rec = aliases.get(&did).unwrap();
        assert_eq!(rec.alias, "New Name");
        assert_eq!(rec.defined_at, s(12));
    }

    #[test]
    fn nym_without_alias_keeps_previous() {
        let mut aliases = AliasDirectory::new();
        let with = entry(2, "1", json!({"dest": ISSUER, "alias": "Faber College"}), ISSUER);
        let without = entry(4, "1", json!({"dest": ISSUER, "role": "101"}), ISSUER);
        aliases.observe(&with);
        assert_eq!(aliases.observe(&without), None);
        assert_eq!(aliases.alias(&Did::parse(ISSUER).unwrap()), Some("Faber College"));
    }
}
