//! Deterministic synthetic domain ledger.
//!
//! Transaction 1 is always a self-registered NYM for "Phil Windley", matching
//! the first transaction of the Sovrin main net. Everything after it is drawn
//! from a seeded ChaCha stream, so the same [`GeneratorConfig`] always yields a
//! byte-identical ledger. Keys and signatures are random filler.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::ledger::{canonical_json, classify, parse_txn, Did, LedgerError, Payload, SeqNo, TxnEnvelope, TxnType};
use crate::merkle::{MerkleTree, RootHash};

pub const FIXTURE_ALIAS: &str = "Phil Windley";
pub const FIXTURE_DID: &str = "Th7MpTaRZVRYnPiabds81Y";
const BASE_TIME: u64 = 1_500_000_000;

pub const DEFAULT_ALIASES: &[&str] = &[
    "Desert Schools Credit Union",
    "Faber College",
    "Acme Corporation",
    "Globex Industries",
    "Initech Solutions",
    "Umbrella Holdings",
    "Stark Manufacturing",
    "Wayne Enterprises",
    "Cyberdyne Systems",
    "Hooli Technologies",
    "Vandelay Imports",
    "Tyrell Medical",
    "Berlin Transit Authority",
    "Telekom Innovation Laboratories",
    "Northwind Traders",
    "Contoso Pharmacy",
    "Fabrikam Logistics",
    "Aperture Science",
    "Soylent Foods",
    "Massive Dynamic",
];

pub const DEFAULT_SCHEMA_NAMES: &[&str] = &[
    "ID card",
    "proof of employment",
    "proof of matriculation",
    "proof of enrollment",
    "proof of income",
    "driving license",
    "university degree",
    "boatmaster certificate",
    "parking permit",
    "event ticket",
    "attestation of sickness",
    "health insurance",
    "bank account",
    "tax residency",
    "student pass",
];

pub const DEFAULT_ATTRS: &[&str] = &[
    "name",
    "company",
    "title",
    "date_of_birth",
    "address",
    "salary",
    "employee_number",
    "start_date",
    "nationality",
    "photo",
    "valid_until",
    "email",
    "phone",
    "gender",
    "height",
    "eye_color",
    "institution",
    "grade",
    "vehicle_class",
    "plate",
];

const REGION_SUFFIXES: &[&str] = &[
    "North", "South", "East", "West", "Central", "Pacific", "Atlantic", "Alpine", "Coastal", "Metro",
];
const VERSIONS: &[&str] = &["1.0", "1.1", "1.2", "2.0", "3.0"];
const TAGS: &[&str] = &["tag", "default", "latest"];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("transaction rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Share of each transaction type when generating by total count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMix {
    pub nym: f64,
    pub schema: f64,
    pub claim_def: f64,
    pub attrib: f64,
}

impl Default for TypeMix {
    fn default() -> Self {
        Self {
            nym: 0.60,
            schema: 0.15,
            claim_def: 0.20,
            attrib: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_orgs: usize,
    pub n_schemas: usize,
    pub claim_defs_per_schema: usize,
    pub alias_vocab: Vec<String>,
    pub schema_name_vocab: Vec<String>,
    pub attr_vocab: Vec<String>,
    /// When set, emit exactly this many transactions drawn from `mix`
    /// instead of the org/schema/claim-def counts.
    pub count: Option<usize>,
    pub mix: TypeMix,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            seed: 42,
            n_orgs: 20,
            n_schemas: 30,
            claim_defs_per_schema: 2,
            alias_vocab: owned(DEFAULT_ALIASES),
            schema_name_vocab: owned(DEFAULT_SCHEMA_NAMES),
            attr_vocab: owned(DEFAULT_ATTRS),
            count: None,
            mix: TypeMix::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn with_count(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count: Some(count),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        match self.count {
            Some(0) => return bad("count must be at least 1"),
            Some(n) if n > 1 => {
                let m = self.mix;
                let parts = [m.nym, m.schema, m.claim_def, m.attrib];
                if parts.iter().any(|p| !p.is_finite() || *p < 0.0) || parts.iter().sum::<f64>() <= 0.0 {
                    return bad("type mix must be non-negative with a positive sum");
                }
                if self.alias_vocab.is_empty() || self.schema_name_vocab.is_empty() || self.attr_vocab.len() < 2 {
                    return bad("count mode needs aliases, schema names and at least two attribute names");
                }
            }
            _ => {}
        }
        if self.n_orgs > 0 && self.alias_vocab.is_empty() {
            return bad("n_orgs > 0 needs a non-empty alias vocabulary");
        }
        if self.n_schemas > 0 && (self.schema_name_vocab.is_empty() || self.attr_vocab.is_empty()) {
            return bad("n_schemas > 0 needs schema name and attribute vocabularies");
        }
        if self
            .schema_name_vocab
            .iter()
            .chain(&self.alias_vocab)
            .chain(&self.attr_vocab)
            .any(|s| s.trim().is_empty())
        {
            return bad("vocabulary entries must be non-empty");
        }
        Ok(())
    }

    /// Number of transactions `generate` will emit.
    pub fn expected_len(&self) -> usize {
        self.count
            .unwrap_or(1 + self.n_orgs + self.n_schemas * (1 + self.claim_defs_per_schema))
    }
}

/// The generated ledger plus the bookkeeping needed to accept appends.
#[derive(Debug, Clone)]
pub struct SimLedger {
    txns: Vec<TxnEnvelope>,
    tree: MerkleTree,
    known_dids: HashSet<Did>,
    schemas: HashSet<SeqNo>,
}

impl Default for SimLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl SimLedger {
    pub fn new() -> Self {
        Self {
            txns: Vec::new(),
            tree: MerkleTree::new(),
            known_dids: HashSet::new(),
            schemas: HashSet::new(),
        }
    }

    /// Serves recorded transactions as they are. Only sequence contiguity is
    /// checked; appends are still validated against the ledger invariants.
    pub fn from_recorded(txns: Vec<TxnEnvelope>) -> Result<Self, SimError> {
        let mut ledger = Self::new();
        for env in txns {
            let seq = env.seq_no().get();
            if seq != ledger.len() + 1 {
                return Err(SimError::Rejected(format!(
                    "seqNo {seq} does not follow head {}",
                    ledger.len()
                )));
            }
            if let Ok(entry) = classify(env.clone()) {
                match &entry.payload {
                    Payload::Nym(n) => {
                        ledger.known_dids.insert(n.dest.clone());
                    }
                    Payload::Schema(_) => {
                        ledger.schemas.insert(env.seq_no());
                    }
                    _ => {}
                }
            }
            ledger.tree.append(env.canonical_text().as_bytes());
            ledger.txns.push(env);
        }
        Ok(ledger)
    }

    pub fn len(&self) -> u64 {
        self.txns.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.txns.is_empty()
    }

    pub fn txns(&self) -> &[TxnEnvelope] {
        &self.txns
    }

    pub fn get(&self, seq_no: u64) -> Option<&TxnEnvelope> {
        seq_no.checked_sub(1).and_then(|i| self.txns.get(i as usize))
    }

    /// Inclusive range, clamped to the ledger head.
    pub fn range(&self, from: u64, to: u64) -> &[TxnEnvelope] {
        let len = self.len();
        if from == 0 || from > to || from > len {
            return &[];
        }
        &self.txns[(from - 1) as usize..to.min(len) as usize]
    }

    pub fn root(&self) -> RootHash {
        self.tree.root()
    }

    pub fn tree(&self) -> &MerkleTree {
        &self.tree
    }

    /// The first `k` NYM transactions.
    pub fn genesis(&self, k: usize) -> Vec<&TxnEnvelope> {
        self.txns
            .iter()
            .filter(|t| t.txn_type() == TxnType::Nym)
            .take(k)
            .collect()
    }

    /// Appends a transaction document after validating it against the ledger
    /// invariants. A missing `txnMetadata.seqNo` is filled in with the next
    /// position; a present one must equal it.
    pub fn append_document(&mut self, mut doc: Value) -> Result<SeqNo, SimError> {
        let next = self.len() + 1;
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| SimError::Rejected("document is not an object".into()))?;
        let meta = obj.entry("txnMetadata").or_insert_with(|| Value::Object(Map::new()));
        let meta = meta
            .as_object_mut()
            .ok_or_else(|| SimError::Rejected("txnMetadata is not an object".into()))?;
        match meta.get("seqNo") {
            None => {
                meta.insert("seqNo".into(), json!(next));
            }
            Some(v) if v.as_u64() == Some(next) => {}
            Some(v) => {
                return Err(SimError::Rejected(format!(
                    "seqNo {v} does not follow head {}",
                    next - 1
                )))
            }
        }
        meta.entry("txnTime").or_insert_with(|| json!(BASE_TIME + next * 60));
        let env = parse_txn(&canonical_json(&doc))?;
        self.push(env)?;
        Ok(SeqNo::new(next).expect("next >= 1"))
    }

    fn push(&mut self, env: TxnEnvelope) -> Result<(), SimError> {
        let seq = env.seq_no().get();
        if seq != self.len() + 1 {
            return Err(SimError::Rejected(format!(
                "seqNo {seq} does not follow head {}",
                self.len()
            )));
        }
        let genesis = self.txns.is_empty();
        if !genesis && !self.known_dids.contains(env.author_did()) {
            return Err(SimError::Rejected(format!("author {} has no NYM", env.author_did())));
        }
        let entry = classify(env.clone())?;
        match &entry.payload {
            Payload::Nym(n) => {
                if genesis && n.dest != *env.author_did() {
                    return Err(SimError::Rejected("the first NYM must be self-registered".into()));
                }
                self.known_dids.insert(n.dest.clone());
            }
            Payload::Schema(_) => {
                self.schemas.insert(env.seq_no());
            }
            Payload::ClaimDef(c) => {
                if !self.schemas.contains(&c.schema_ref) {
                    return Err(SimError::Rejected(format!("ref {} is not a SCHEMA", c.schema_ref)));
                }
            }
            Payload::Attrib(_) | Payload::Other(_) => {}
        }
        if genesis && entry.payload.txn_type() != TxnType::Nym {
            return Err(SimError::Rejected("the first transaction must be a NYM".into()));
        }
        self.tree.append(env.canonical_text().as_bytes());
        self.txns.push(env);
        Ok(())
    }

    /// Re-checks every ledger invariant from scratch.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut known = HashSet::new();
        let mut schemas = HashSet::new();
        for (i, env) in self.txns.iter().enumerate() {
            if env.seq_no().get() != i as u64 + 1 {
                return Err(format!("seqNo gap at position {i}"));
            }
            if i > 0 && !known.contains(env.author_did()) {
                return Err(format!("author of {} unknown", env.seq_no()));
            }
            let entry = classify(env.clone()).map_err(|e| e.to_string())?;
            if entry.payload.txn_type() != env.txn_type() {
                return Err(format!("payload/type mismatch at {}", env.seq_no()));
            }
            match entry.payload {
                Payload::Nym(n) => {
                    known.insert(n.dest);
                }
                Payload::Schema(_) => {
                    schemas.insert(env.seq_no());
                }
                Payload::ClaimDef(c) if c.schema_ref >= env.seq_no() || !schemas.contains(&c.schema_ref) => {
                    return Err(format!("dangling ref in {}", env.seq_no()));
                }
                _ => {}
            }
        }
        if MerkleTree::from_leaves(self.txns.iter().map(|t| t.canonical_text())).root() != self.root() {
            return Err("root out of date".into());
        }
        Ok(())
    }
}

struct Builder {
    rng: ChaCha8Rng,
    ledger: SimLedger,
    /// DIDs allowed to author transactions, with their current alias.
    anchors: Vec<Did>,
    all_dids: Vec<Did>,
    aliases: HashMap<Did, String>,
    schemas: Vec<(SeqNo, Vec<String>)>,
    alias_uses: usize,
}

impl Builder {
    fn next_seq(&self) -> u64 {
        self.ledger.len() + 1
    }

    fn fresh_did(&mut self) -> Did {
        loop {
            let did = Did::from_bytes(&self.rng.gen());
            if !self.ledger.known_dids.contains(&did) {
                return did;
            }
        }
    }

    fn digits(&mut self, n: usize) -> String {
        let mut s = String::with_capacity(n);
        s.push(char::from(b'1' + self.rng.gen_range(0..9)));
        for _ in 1..n {
            s.push(char::from(b'0' + self.rng.gen_range(0..10)));
        }
        s
    }

    fn signature(&mut self) -> String {
        let bytes: [u8; 32] = self.rng.gen();
        bs58::encode(bytes).into_string()
    }

    fn envelope(&mut self, kind: &str, author: &Did, data: Value, txn_id: Option<String>) -> Value {
        let seq = self.next_seq();
        let mut meta = json!({"seqNo": seq, "txnTime": BASE_TIME + seq * 60});
        if let Some(id) = txn_id {
            meta["txnId"] = json!(id);
        }
        json!({
            "reqSignature": {
                "type": "ED25519",
                "values": [{"from": author.as_str(), "value": self.signature()}]
            },
            "txn": {
                "data": data,
                "metadata": {"from": author.as_str(), "reqId": self.rng.gen_range(1_000_000_000u64..2_000_000_000)},
                "protocolVersion": 2,
                "type": kind
            },
            "txnMetadata": meta,
            "ver": "1"
        })
    }

    fn emit(&mut self, doc: Value) {
        let env = parse_txn(&canonical_json(&doc)).expect("generated transaction parses");
        self.ledger
            .push(env)
            .expect("generated transaction satisfies invariants");
    }

    fn pick_anchor(&mut self) -> Did {
        self.anchors
            .choose(&mut self.rng)
            .expect("at least the fixture anchor")
            .clone()
    }

    fn next_alias(&mut self, vocab: &[String]) -> String {
        let i = self.alias_uses;
        self.alias_uses += 1;
        let base = &vocab[i % vocab.len()];
        match i / vocab.len() {
            0 => base.clone(),
            round => format!("{base} {}", REGION_SUFFIXES[(round - 1) % REGION_SUFFIXES.len()]),
        }
    }

    fn nym(&mut self, author: &Did, dest: &Did, alias: Option<&str>, role: Option<&str>) {
        let verkey = format!("~{}", bs58::encode(self.rng.gen::<[u8; 16]>()).into_string());
        let mut data = json!({"dest": dest.as_str(), "verkey": verkey});
        if let Some(a) = alias {
            data["alias"] = json!(a);
        }
        data["role"] = role.map_or(Value::Null, |r| json!(r));
        let doc = self.envelope("1", author, data, None);
        self.emit(doc);
        if let Some(a) = alias {
            self.aliases.insert(dest.clone(), a.to_string());
        }
    }

    fn org(&mut self, vocab: &[String]) {
        let author = self.pick_anchor();
        let dest = self.fresh_did();
        let alias = self.next_alias(vocab);
        self.nym(&author, &dest, Some(&alias), Some("101"));
        self.anchors.push(dest.clone());
        self.all_dids.push(dest);
    }

    fn schema(&mut self, author: &Did, names: &[String], attrs: &[String]) -> SeqNo {
        let name = names.choose(&mut self.rng).expect("non-empty").clone();
        let version = *VERSIONS.choose(&mut self.rng).expect("non-empty");
        let k = self.rng.gen_range(2..=6usize).min(attrs.len());
        let chosen: Vec<String> = attrs.choose_multiple(&mut self.rng, k).cloned().collect();
        let data = json!({"data": {"attr_names": chosen, "name": name, "version": version}});
        let id = format!("{author}:2:{name}:{version}");
        let doc = self.envelope("101", author, data, Some(id));
        let seq = SeqNo::new(self.next_seq()).expect("positive");
        self.emit(doc);
        self.schemas.push((seq, chosen));
        seq
    }

    fn claim_def(&mut self, author: &Did, schema: SeqNo, attrs: &[String]) {
        let tag = *TAGS.choose(&mut self.rng).expect("non-empty");
        let mut r = Map::new();
        r.insert("master_secret".into(), json!(self.digits(24)));
        for a in attrs {
            r.insert(a.to_lowercase(), json!(self.digits(24)));
        }
        let primary = json!({
            "n": self.digits(40),
            "r": r,
            "rctxt": self.digits(40),
            "s": self.digits(40),
            "z": self.digits(40)
        });
        let data = json!({"data": {"primary": primary}, "ref": schema.get(), "signature_type": "CL", "tag": tag});
        let id = format!("{author}:3:CL:{schema}:{tag}");
        let doc = self.envelope("102", author, data, Some(id));
        self.emit(doc);
    }

    fn attrib(&mut self) {
        let author = self.pick_anchor();
        let dest = self.all_dids.choose(&mut self.rng).expect("non-empty").clone();
        let endpoint = format!(
            "{{\"endpoint\":{{\"ha\":\"10.{}.{}.{}:9700\"}}}}",
            self.rng.gen_range(0..255),
            self.rng.gen_range(0..255),
            self.rng.gen_range(1..255)
        );
        let doc = self.envelope("100", &author, json!({"dest": dest.as_str(), "raw": endpoint}), None);
        self.emit(doc);
    }
}

pub fn generate(config: &GeneratorConfig) -> Result<SimLedger, SimError> {
    config.validate()?;
    let fixture = Did::parse(FIXTURE_DID).expect("fixture DID is valid");
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        ledger: SimLedger::new(),
        anchors: vec![fixture.clone()],
        all_dids: vec![fixture.clone()],
        aliases: HashMap::new(),
        schemas: Vec::new(),
        alias_uses: 0,
    };
    b.nym(&fixture, &fixture, Some(FIXTURE_ALIAS), Some("0"));

    match config.count {
        None => {
            for _ in 0..config.n_orgs {
                b.org(&config.alias_vocab);
            }
            for _ in 0..config.n_schemas {
                let author = b.pick_anchor();
                let seq = b.schema(&author, &config.schema_name_vocab, &config.attr_vocab);
                let attrs = b.schemas.last().expect("just pushed").1.clone();
                for _ in 0..config.claim_defs_per_schema {
                    let issuer = b.pick_anchor();
                    b.claim_def(&issuer, seq, &attrs);
                }
            }
        }
        Some(total) => {
            let m = config.mix;
            let weights = [m.nym, m.schema, m.claim_def, m.attrib];
            let sum: f64 = weights.iter().sum();
            while (b.ledger.len() as usize) < total {
                let mut x = b.rng.gen::<f64>() * sum;
                let mut kind = 0;
                while kind < 3 && x >= weights[kind] {
                    x -= weights[kind];
                    kind += 1;
                }
                if kind == 2 && b.schemas.is_empty() {
                    kind = 1;
                }
                match kind {
                    0 => {
                        let roll: f64 = b.rng.gen();
                        if roll < 0.25 || b.anchors.len() < 2 {
                            b.org(&config.alias_vocab);
                        } else if roll < 0.28 {
                            // Re-alias an existing organisation.
                            let author = b.pick_anchor();
                            let dest = b.anchors[1..].choose(&mut b.rng).expect("len >= 2").clone();
                            let alias = b.next_alias(&config.alias_vocab);
                            b.nym(&author, &dest, Some(&alias), Some("101"));
                        } else {
                            let author = b.pick_anchor();
                            let dest = b.fresh_did();
                            b.nym(&author, &dest, None, None);
                            b.all_dids.push(dest);
                        }
                    }
                    1 => {
                        let author = b.pick_anchor();
                        b.schema(&author, &config.schema_name_vocab, &config.attr_vocab);
                    }
                    2 => {
                        let author = b.pick_anchor();
                        let (seq, attrs) = b.schemas.choose(&mut b.rng).expect("non-empty").clone();
                        b.claim_def(&author, seq, &attrs);
                    }
                    _ => b.attrib(),
                }
            }
        }
    }
    Ok(b.ledger)
}

/// Aliases currently visible in `ledger`, one per DID (latest NYM wins).
pub fn current_aliases(ledger: &SimLedger) -> HashMap<Did, String> {
    let mut out = HashMap::new();
    for env in ledger.txns() {
        if let Ok(entry) = classify(env.clone()) {
            if let Payload::Nym(n) = entry.payload {
                if let Some(a) = n.alias {
                    out.insert(n.dest, a);
                }
            }
        }
    }
    out
}
