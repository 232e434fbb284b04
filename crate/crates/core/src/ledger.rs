//! Indy-style domain ledger transactions.
//!
//! A transaction arrives as a JSON document. [`parse_txn`] pulls out the
//! envelope fields every transaction carries (`txnMetadata.seqNo`, `txn.type`,
//! `txn.metadata.from`, `txnMetadata.txnTime`) and [`classify`] extracts the
//! type-specific payload. [`canonical_leaf_bytes`] produces the byte string
//! that is hashed into the Merkle tree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid seqNo: {0}")]
    InvalidSeqNo(String),
    #[error("invalid DID `{0}`")]
    InvalidDid(String),
    #[error("payload schema violation in seqNo {seq_no}: {reason}")]
    PayloadSchemaViolation { seq_no: u64, reason: String },
}

pub type Result<T, E = LedgerError> = std::result::Result<T, E>;

/// 1-based position of a transaction in the domain ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct SeqNo(u64);

impl SeqNo {
    pub const FIRST: SeqNo = SeqNo(1);

    pub fn new(value: u64) -> Result<Self> {
        if value == 0 {
            return Err(LedgerError::InvalidSeqNo("0".into()));
        }
        Ok(SeqNo(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn next(self) -> SeqNo {
        SeqNo(self.0 + 1)
    }

    /// 0-based leaf position in the Merkle tree.
    pub fn leaf_index(self) -> u64 {
        self.0 - 1
    }
}

impl TryFrom<u64> for SeqNo {
    type Error = LedgerError;
    fn try_from(value: u64) -> Result<Self> {
        SeqNo::new(value)
    }
}

impl From<SeqNo> for u64 {
    fn from(s: SeqNo) -> u64 {
        s.0
    }
}

impl fmt::Display for SeqNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

const BASE58_ALPHABET: &str = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

/// An unqualified Indy DID: 21 or 22 base58 characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Did(String);

impl Did {
    pub fn parse(s: &str) -> Result<Self> {
        let len = s.chars().count();
        if !(21..=22).contains(&len) || !s.chars().all(|c| BASE58_ALPHABET.contains(c)) {
            return Err(LedgerError::InvalidDid(s.to_string()));
        }
        Ok(Did(s.to_string()))
    }

    /// Base58 encoding of a 16-byte identifier, the way Indy derives DIDs
    /// from the first half of a verkey. The top bit is forced on so the
    /// encoding is always 22 characters.
    pub fn from_bytes(bytes: &[u8; 16]) -> Self {
        let mut b = *bytes;
        b[0] |= 0x80;
        Did(bs58::encode(b).into_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Did {
    type Error = LedgerError;
    fn try_from(s: String) -> Result<Self> {
        Did::parse(&s)
    }
}

impl From<Did> for String {
    fn from(d: Did) -> String {
        d.0
    }
}

impl fmt::Display for Did {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Did {
    type Err = LedgerError;
    fn from_str(s: &str) -> Result<Self> {
        Did::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxnType {
    Nym,
    Attrib,
    Schema,
    ClaimDef,
    Other,
}

impl TxnType {
    pub const ALL: [TxnType; 5] = [
        TxnType::Nym,
        TxnType::Attrib,
        TxnType::Schema,
        TxnType::ClaimDef,
        TxnType::Other,
    ];

    /// Total mapping from the wire code.
    pub fn from_code(code: &str) -> TxnType {
        match code {
            "1" => TxnType::Nym,
            "100" => TxnType::Attrib,
            "101" => TxnType::Schema,
            "102" => TxnType::ClaimDef,
            _ => TxnType::Other,
        }
    }

    /// Wire code; `None` for [`TxnType::Other`], which has no single code.
    pub fn code(self) -> Option<&'static str> {
        match self {
            TxnType::Nym => Some("1"),
            TxnType::Attrib => Some("100"),
            TxnType::Schema => Some("101"),
            TxnType::ClaimDef => Some("102"),
            TxnType::Other => None,
        }
    }

    /// Lowercase name used in query parameters (`nym`, `claim_def`, ...).
    pub fn param_name(self) -> &'static str {
        match self {
            TxnType::Nym => "nym",
            TxnType::Attrib => "attrib",
            TxnType::Schema => "schema",
            TxnType::ClaimDef => "claim_def",
            TxnType::Other => "other",
        }
    }

    pub fn from_param_name(s: &str) -> Option<TxnType> {
        TxnType::ALL.into_iter().find(|t| t.param_name() == s)
    }
}

impl fmt::Display for TxnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TxnType::Nym => "NYM",
            TxnType::Attrib => "ATTRIB",
            TxnType::Schema => "SCHEMA",
            TxnType::ClaimDef => "CLAIM_DEF",
            TxnType::Other => "OTHER",
        };
        f.write_str(s)
    }
}

/// One raw ledger transaction with its envelope fields extracted.
#[derive(Debug, Clone, PartialEq)]
pub struct TxnEnvelope {
    seq_no: SeqNo,
    txn_type: TxnType,
    author_did: Did,
    txn_time: Option<u64>,
    raw: String,
    doc: Value,
}

impl TxnEnvelope {
    pub fn seq_no(&self) -> SeqNo {
        self.seq_no
    }

    pub fn txn_type(&self) -> TxnType {
        self.txn_type
    }

    pub fn author_did(&self) -> &Did {
        &self.author_did
    }

    pub fn txn_time(&self) -> Option<u64> {
        self.txn_time
    }

    /// The document text exactly as it was received.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn document(&self) -> &Value {
        &self.doc
    }

    /// Canonical text of the document, see [`canonical_leaf_bytes`].
    pub fn canonical_text(&self) -> String {
        canonical_json(&self.doc)
    }
}

fn path<'a>(doc: &'a Value, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().try_fold(doc, |v, k| v.get(k))
}

/// Reads an integer that may be encoded as a JSON number or a decimal string.
fn as_u64_lenient(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub fn parse_txn(raw: &str) -> Result<TxnEnvelope> {
    let doc: Value = serde_json::from_str(raw).map_err(|e| LedgerError::MalformedDocument(e.to_string()))?;
    if !doc.is_object() {
        return Err(LedgerError::MalformedDocument("top level is not an object".into()));
    }
    let seq = path(&doc, &["txnMetadata", "seqNo"]).ok_or(LedgerError::MissingField("txnMetadata.seqNo"))?;
    let seq_no = match seq {
        Value::Number(n) => match n.as_u64() {
            Some(v) => SeqNo::new(v)?,
            None => return Err(LedgerError::InvalidSeqNo(n.to_string())),
        },
        other => return Err(LedgerError::InvalidSeqNo(other.to_string())),
    };
    let txn_type = match path(&doc, &["txn", "type"]) {
        Some(Value::String(s)) => TxnType::from_code(s),
        Some(Value::Number(n)) => TxnType::from_code(&n.to_string()),
        Some(_) => TxnType::Other,
        None => return Err(LedgerError::MissingField("txn.type")),
    };
    let author_did = match path(&doc, &["txn", "metadata", "from"]) {
        Some(Value::String(s)) => Did::parse(s)?,
        Some(other) => return Err(LedgerError::InvalidDid(other.to_string())),
        None => return Err(LedgerError::MissingField("txn.metadata.from")),
    };
    let txn_time = path(&doc, &["txnMetadata", "txnTime"]).and_then(as_u64_lenient);
    Ok(TxnEnvelope {
        seq_no,
        txn_type,
        author_did,
        txn_time,
        raw: raw.to_string(),
        doc,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NymData {
    pub dest: Did,
    pub alias: Option<String>,
    pub role: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaData {
    pub name: String,
    pub version: String,
    pub attr_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimDefData {
    pub schema_ref: SeqNo,
    pub signature_type: String,
    pub tag: String,
}

/// Payload of a transaction kept only as its `txn.data` subtree.
#[derive(Debug, Clone, PartialEq)]
pub struct Opaque(pub Value);

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Nym(NymData),
    Schema(SchemaData),
    ClaimDef(ClaimDefData),
    Attrib(Opaque),
    Other(Opaque),
}

impl Payload {
    pub fn txn_type(&self) -> TxnType {
        match self {
            Payload::Nym(_) => TxnType::Nym,
            Payload::Schema(_) => TxnType::Schema,
            Payload::ClaimDef(_) => TxnType::ClaimDef,
            Payload::Attrib(_) => TxnType::Attrib,
            Payload::Other(_) => TxnType::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub envelope: TxnEnvelope,
    pub payload: Payload,
}

fn is_dotted_numeric(s: &str) -> bool {
    !s.is_empty()
        && s.split('.')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()))
}

fn non_empty_str(v: Option<&Value>) -> Option<String> {
    match v {
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        _ => None,
    }
}

pub fn classify(env: TxnEnvelope) -> Result<LedgerEntry> {
    let seq_no = env.seq_no.get();
    let violation = |reason: &str| LedgerError::PayloadSchemaViolation {
        seq_no,
        reason: reason.to_string(),
    };
    let data = path(&env.doc, &["txn", "data"]);
    let payload = match env.txn_type {
        TxnType::Nym => {
            let data = data.ok_or_else(|| violation("NYM without txn.data"))?;
            let dest = match data.get("dest") {
                Some(Value::String(s)) => Did::parse(s).map_err(|_| violation("NYM dest is not a valid DID"))?,
                _ => return Err(violation("NYM without dest")),
            };
            Payload::Nym(NymData {
                dest,
                alias: non_empty_str(data.get("alias")),
                role: non_empty_str(data.get("role")),
            })
        }
        TxnType::Schema => {
            let inner = data
                .and_then(|d| d.get("data"))
                .ok_or_else(|| violation("SCHEMA without txn.data.data"))?;
            let name = non_empty_str(inner.get("name")).ok_or_else(|| violation("SCHEMA without name"))?;
            let version = match inner.get("version") {
                Some(Value::String(v)) if is_dotted_numeric(v) => v.clone(),
                Some(_) => return Err(violation("SCHEMA version is not dotted-numeric")),
                None => return Err(violation("SCHEMA without version")),
            };
            let attrs = inner
                .get("attr_names")
                .and_then(Value::as_array)
                .ok_or_else(|| violation("SCHEMA without attr_names"))?;
            let mut attr_names = Vec::with_capacity(attrs.len());
            for a in attrs {
                let a = a
                    .as_str()
                    .ok_or_else(|| violation("SCHEMA attr_names entry is not a string"))?;
                if attr_names.iter().any(|x: &String| x == a) {
                    return Err(violation("SCHEMA attr_names contains duplicates"));
                }
                attr_names.push(a.to_string());
            }
            if attr_names.is_empty() {
                return Err(violation("SCHEMA attr_names is empty"));
            }
            Payload::Schema(SchemaData {
                name,
                version,
                attr_names,
            })
        }
        TxnType::ClaimDef => {
            let data = data.ok_or_else(|| violation("CLAIM_DEF without txn.data"))?;
            let schema_ref = data
                .get("ref")
                .and_then(as_u64_lenient)
                .ok_or_else(|| violation("CLAIM_DEF without ref"))?;
            if schema_ref == 0 || schema_ref >= seq_no {
                return Err(violation("CLAIM_DEF ref must point to an earlier transaction"));
            }
            Payload::ClaimDef(ClaimDefData {
                schema_ref: SeqNo(schema_ref),
                signature_type: non_empty_str(data.get("signature_type")).unwrap_or_else(|| "CL".into()),
                tag: non_empty_str(data.get("tag")).unwrap_or_else(|| "tag".into()),
            })
        }
        TxnType::Attrib => Payload::Attrib(Opaque(data.cloned().unwrap_or(Value::Null))),
        TxnType::Other => Payload::Other(Opaque(data.cloned().unwrap_or(Value::Null))),
    };
    Ok(LedgerEntry { envelope: env, payload })
}

/// Sorted-key, whitespace-free UTF-8 rendering of a JSON value.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serialization"));
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&serde_json::to_string(scalar).expect("scalar serialization")),
    }
}

/// Bytes hashed into the Merkle tree for this transaction.
pub fn canonical_leaf_bytes(env: &TxnEnvelope) -> Vec<u8> {
    env.canonical_text().into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const AUTHOR: &str = "V4SGRU86Z58d6TV7PBUe6f";

    fn schema_doc(seq: u64) -> Value {
        json!({
            "txn": {
                "type": "101",
                "data": {"data": {"name": "ID card", "version": "1.0", "attr_names": ["name", "date_of_birth"]}},
                "metadata": {"from": AUTHOR, "reqId": 1}
            },
            "txnMetadata": {"seqNo": seq, "txnTime": 1_500_000_000u64}
        })
    }

    #[test]
    fn parses_schema_envelope() {
        let raw = serde_json::to_string_pretty(&schema_doc(5)).unwrap();
        let env = parse_txn(&raw).unwrap();
        assert_eq!(env.seq_no().get(), 5);
        assert_eq!(env.txn_type(), TxnType::Schema);
        assert_eq!(env.author_did().as_str(), AUTHOR);
        assert_eq!(env.txn_time(), Some(1_500_000_000));
        assert_eq!(env.raw(), raw);
        match classify(env).unwrap().payload {
            Payload::Schema(s) => {
                assert_eq!(s.name, "ID card");
                assert_eq!(s.attr_names, vec!["name", "date_of_birth"]);
            }
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn empty_document_is_missing_field() {
        assert!(matches!(parse_txn("{}"), Err(LedgerError::MissingField(_))));
        assert!(matches!(parse_txn("not json"), Err(LedgerError::MalformedDocument(_))));
        assert!(matches!(parse_txn("[1]"), Err(LedgerError::MalformedDocument(_))));
    }

    #[test]
    fn unknown_type_code_is_other() {
        let mut doc = schema_doc(3);
        doc["txn"]["type"] = json!("9999");
        let env = parse_txn(&doc.to_string()).unwrap();
        assert_eq!(env.txn_type(), TxnType::Other);
        assert!(matches!(classify(env).unwrap().payload, Payload::Other(_)));
    }

    #[test]
    fn numeric_type_code_accepted() {
        let mut doc = schema_doc(3);
        doc["txn"]["type"] = json!(101);
        assert_eq!(parse_txn(&doc.to_string()).unwrap().txn_type(), TxnType::Schema);
    }

    #[test]
    fn non_positive_seq_no_rejected() {
        let mut doc = schema_doc(1);
        doc["txnMetadata"]["seqNo"] = json!(0);
        assert!(matches!(parse_txn(&doc.to_string()), Err(LedgerError::InvalidSeqNo(_))));
        doc["txnMetadata"]["seqNo"] = json!(-4);
        assert!(matches!(parse_txn(&doc.to_string()), Err(LedgerError::InvalidSeqNo(_))));
        doc["txnMetadata"]["seqNo"] = json!("7");
        assert!(matches!(parse_txn(&doc.to_string()), Err(LedgerError::InvalidSeqNo(_))));
    }

    #[test]
    fn bad_author_rejected() {
        let mut doc = schema_doc(1);
        doc["txn"]["metadata"]["from"] = json!("0OIl0OIl0OIl0OIl0OIl0O");
        assert!(matches!(parse_txn(&doc.to_string()), Err(LedgerError::InvalidDid(_))));
        doc["txn"]["metadata"].as_object_mut().unwrap().remove("from");
        assert_eq!(
            parse_txn(&doc.to_string()),
            Err(LedgerError::MissingField("txn.metadata.from"))
        );
    }

    fn nym(alias: Option<&str>) -> TxnEnvelope {
        let mut data = json!({"dest": "Th7MpTaRZVRYnPiabds81Y", "verkey": "~7TYfekw4GUagBnBVCqPjiC"});
        if let Some(a) = alias {
            data["alias"] = json!(a);
        }
        let doc = json!({
            "txn": {"type": "1", "data": data, "metadata": {"from": AUTHOR}},
            "txnMetadata": {"seqNo": 1}
        });
        parse_txn(&doc.to_string()).unwrap()
    }

    #[test]
    fn nym_alias_present_and_absent() {
        match classify(nym(Some("Phil Windley"))).unwrap().payload {
            Payload::Nym(n) => assert_eq!(n.alias.as_deref(), Some("Phil Windley")),
            other => panic!("{other:?}"),
        }
        match classify(nym(None)).unwrap().payload {
            Payload::Nym(n) => {
                assert_eq!(n.alias, None);
                assert_eq!(n.dest.as_str(), "Th7MpTaRZVRYnPiabds81Y");
            }
            other => panic!("{other:?}"),
        }
    }

    fn claim_def(seq: u64, data: Value) -> TxnEnvelope {
        let doc = json!({
            "txn": {"type": "102", "data": data, "metadata": {"from": AUTHOR}},
            "txnMetadata": {"seqNo": seq}
        });
        parse_txn(&doc.to_string()).unwrap()
    }

    #[test]
    fn claim_def_ref_round_trips() {
        let env = claim_def(9, json!({"ref": 5, "signature_type": "CL", "tag": "default"}));
        match classify(env).unwrap().payload {
            Payload::ClaimDef(c) => {
                assert_eq!(c.schema_ref.get(), 5);
                assert_eq!(c.tag, "default");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn claim_def_violations() {
        let no_ref = claim_def(9, json!({"signature_type": "CL"}));
        assert!(matches!(
            classify(no_ref),
            Err(LedgerError::PayloadSchemaViolation { .. })
        ));
        let forward_ref = claim_def(9, json!({"ref": 9}));
        assert!(matches!(
            classify(forward_ref),
            Err(LedgerError::PayloadSchemaViolation { .. })
        ));
    }

    #[test]
    fn schema_violations() {
        for (field, value) in [
            ("name", json!("")),
            ("version", json!("v1")),
            ("attr_names", json!([])),
            ("attr_names", json!(["a", "a"])),
        ] {
            let mut doc = schema_doc(2);
            doc["txn"]["data"]["data"][field] = value;
            let env = parse_txn(&doc.to_string()).unwrap();
            assert!(
                matches!(classify(env), Err(LedgerError::PayloadSchemaViolation { .. })),
                "{field}"
            );
        }
    }

    #[test]
    fn canonical_form_ignores_layout_and_key_order() {
        let a = parse_txn(r#"{"txnMetadata":{"seqNo":2},"txn":{"type":"1","metadata":{"from":"V4SGRU86Z58d6TV7PBUe6f"},"data":{"dest":"Th7MpTaRZVRYnPiabds81Y"}}}"#).unwrap();
        let b = parse_txn(
            r#"{
                "txn": {
                    "data": {"dest": "Th7MpTaRZVRYnPiabds81Y"},
                    "metadata": {"from": "V4SGRU86Z58d6TV7PBUe6f"},
                    "type": "1"
                },
                "txnMetadata": {"seqNo": 2}
            }"#,
        )
        .unwrap();
        assert_ne!(a.raw(), b.raw());
        assert_eq!(canonical_leaf_bytes(&a), canonical_leaf_bytes(&b));
        assert_eq!(
            a.canonical_text(),
            r#"{"txn":{"data":{"dest":"Th7MpTaRZVRYnPiabds81Y"},"metadata":{"from":"V4SGRU86Z58d6TV7PBUe6f"},"type":"1"},"txnMetadata":{"seqNo":2}}"#
        );
    }

    #[test]
    fn canonical_form_is_content_sensitive() {
        let a = parse_txn(&schema_doc(5).to_string()).unwrap();
        let mut changed = schema_doc(5);
        changed["txn"]["data"]["data"]["version"] = json!("1.1");
        let b = parse_txn(&changed.to_string()).unwrap();
        assert_ne!(canonical_leaf_bytes(&a), canonical_leaf_bytes(&b));
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let canonical = parse_txn(&schema_doc(5).to_string()).unwrap().canonical_text();
        let reparsed = parse_txn(&canonical).unwrap();
        assert_eq!(canonical_leaf_bytes(&reparsed), canonical.as_bytes());
        assert_eq!(canonical_leaf_bytes(&reparsed), canonical_leaf_bytes(&reparsed));
    }

    #[test]
    fn canonical_escapes_and_unicode() {
        let v = json!({"b": "quote\" and \\ and \n", "a": "Zoltán", "c": [1, -2, 3.5, null, true]});
        let text = canonical_json(&v);
        assert_eq!(
            text,
            r#"{"a":"Zoltán","b":"quote\" and \\ and \n","c":[1,-2,3.5,null,true]}"#
        );
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn did_validation() {
        assert!(Did::parse("V4SGRU86Z58d6TV7PBUe6f").is_ok());
        assert!(Did::parse("Th7MpTaRZVRYnPiabds81").is_ok());
        assert!(Did::parse("short").is_err());
        assert!(Did::parse("V4SGRU86Z58d6TV7PBUe6f0").is_err());
        assert!(Did::parse("V4SGRU86Z58d6TV7PBUe6O").is_err());
        for seed in 0u8..50 {
            let did = Did::from_bytes(&[seed; 16]);
            assert!(Did::parse(did.as_str()).is_ok(), "{did}");
        }
    }

    #[test]
    fn type_codes_round_trip() {
        for t in TxnType::ALL {
            if let Some(code) = t.code() {
                assert_eq!(TxnType::from_code(code), t);
            }
            assert_eq!(TxnType::from_param_name(t.param_name()), Some(t));
        }
    }
}
