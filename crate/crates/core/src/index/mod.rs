//! In-memory full-text index over [`EnrichedDoc`]s.
//!
//! Five fields are indexed per document, each with its own length statistics.
//! Ranking is BM25 (k1 = 1.2, b = 0.75) computed per field and combined with
//! per-field boosts. Every query term must match the document in some field,
//! either exactly or through its expansion (see [`InvertedIndex::expand_term`]).

pub mod analyzer;
pub mod fuzzy;
pub mod oracle;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enrich::EnrichedDoc;
use crate::ledger::{Did, SeqNo, TxnType};

pub use analyzer::{analyze_doc, tokenize, Field, FIELD_COUNT};
pub use oracle::{brute_force_search, brute_force_search_with};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
pub const PREFIX_SCALE: f64 = 0.5;
pub const MAX_LIMIT: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("query has no searchable terms")]
    EmptyQuery,
    #[error("limit must be between 1 and {MAX_LIMIT}, got {0}")]
    InvalidLimit(usize),
    #[error("document {0} is already indexed")]
    DuplicateDocument(SeqNo),
    #[error("document {0} is not indexed")]
    UnknownDocument(SeqNo),
    #[error("field boosts must be positive")]
    InvalidWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldWeights {
    pub schema_name: f64,
    pub attr_names: f64,
    pub author_alias: f64,
    pub schema_version: f64,
    pub raw_text: f64,
}

impl Default for FieldWeights {
    fn default() -> Self {
        Self {
            schema_name: 3.0,
            attr_names: 2.0,
            author_alias: 3.0,
            schema_version: 1.0,
            raw_text: 0.5,
        }
    }
}

impl FieldWeights {
    pub fn validate(&self) -> Result<(), IndexError> {
        if self.as_array().iter().all(|b| *b > 0.0 && b.is_finite()) {
            Ok(())
        } else {
            Err(IndexError::InvalidWeights)
        }
    }

    /// Boosts in [`Field::ALL`] order.
    pub fn as_array(&self) -> [f64; FIELD_COUNT] {
        [
            self.schema_name,
            self.attr_names,
            self.author_alias,
            self.schema_version,
            self.raw_text,
        ]
    }

    pub fn boost(&self, field: Field) -> f64 {
        self.as_array()[field.idx()]
    }
}

/// How a query term that is absent from the dictionary is widened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionPolicy {
    /// Skip fuzzy and prefix expansion when the exact term is indexed.
    pub exact_short_circuit: bool,
    pub prefix: bool,
}

impl Default for ExpansionPolicy {
    fn default() -> Self {
        Self {
            exact_short_circuit: true,
            prefix: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub text: String,
    pub type_filter: Option<BTreeSet<TxnType>>,
    /// Exact author DID filter.
    pub author: Option<Did>,
    pub limit: usize,
    pub offset: usize,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            type_filter: None,
            author: None,
            limit: 10,
            offset: 0,
        }
    }

    pub fn with_types(mut self, types: impl IntoIterator<Item = TxnType>) -> Self {
        self.type_filter = Some(types.into_iter().collect());
        self
    }

    pub fn with_author(mut self, author: Did) -> Self {
        self.author = Some(author);
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_offset(mut self, offset: usize) -> Self {
        self.offset = offset;
        self
    }

    /// Analyzed query terms, deduplicated in first-occurrence order.
    pub fn terms(&self) -> Result<Vec<String>, IndexError> {
        if !(1..=MAX_LIMIT).contains(&self.limit) {
            return Err(IndexError::InvalidLimit(self.limit));
        }
        let mut seen = BTreeSet::new();
        let terms: Vec<String> = tokenize(&self.text)
            .into_iter()
            .filter(|t| seen.insert(t.clone()))
            .collect();
        if terms.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        Ok(terms)
    }

    pub(crate) fn admits(&self, doc: &EnrichedDoc) -> bool {
        self.type_filter
            .as_ref()
            .is_none_or(|types| types.contains(&doc.txn_type))
            && self.author.as_ref().is_none_or(|a| *a == doc.author_did)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMatch {
    pub query_term: String,
    pub index_term: String,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub seq_no: SeqNo,
    pub score: f64,
    pub matched_terms: Vec<TermMatch>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchResults {
    /// Number of matching documents before pagination.
    pub total: usize,
    pub hits: Vec<ScoredHit>,
}

/// An index term a query term expands to.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub term: String,
    pub distance: u32,
    pub scale: f64,
}

/// Orders expansions of one query term: higher scale first, then smaller
/// distance, then dictionary order.
pub(crate) fn prefer_expansion(
    a_scale: f64,
    a_dist: u32,
    a_term: &str,
    b_scale: f64,
    b_dist: u32,
    b_term: &str,
) -> bool {
    match a_scale.total_cmp(&b_scale) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a_dist, a_term) < (b_dist, b_term),
    }
}

pub(crate) fn sort_hits(hits: &mut [ScoredHit]) {
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.seq_no.cmp(&b.seq_no)));
}

pub(crate) fn paginate(mut hits: Vec<ScoredHit>, q: &Query) -> SearchResults {
    sort_hits(&mut hits);
    let total = hits.len();
    let hits = hits.into_iter().skip(q.offset).take(q.limit).collect();
    SearchResults { total, hits }
}

/// One entry of a posting list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub seq_no: SeqNo,
    pub field: Field,
    /// Type of the document, so type filters never need the document itself.
    pub txn_type: TxnType,
    pub tf: u32,
    /// Token count of `field` in this document.
    pub field_len: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct TermEntry {
    // Sorted by (seq_no, field).
    postings: Vec<Posting>,
    df: [u32; FIELD_COUNT],
}

/// Term dictionary split by term length in characters.
///
/// Fuzzy expansion only has to look at lengths within the edit budget of the
/// query term, which keeps it away from the long identifier, key and digit
/// runs that dominate the vocabulary of raw transaction text.
#[derive(Debug, Clone, Default)]
struct Dictionary {
    by_len: Vec<BTreeMap<String, TermEntry>>,
    count: usize,
}

impl Dictionary {
    fn len(&self) -> usize {
        self.count
    }

    fn get(&self, term: &str) -> Option<&TermEntry> {
        self.by_len.get(term.chars().count())?.get(term)
    }

    fn get_mut(&mut self, term: &str) -> Option<&mut TermEntry> {
        self.by_len.get_mut(term.chars().count())?.get_mut(term)
    }

    fn entry(&mut self, term: &str) -> &mut TermEntry {
        let len = term.chars().count();
        if self.by_len.len() <= len {
            self.by_len.resize_with(len + 1, BTreeMap::new);
        }
        let bucket = &mut self.by_len[len];
        if !bucket.contains_key(term) {
            bucket.insert(term.to_string(), TermEntry::default());
            self.count += 1;
        }
        bucket.get_mut(term).expect("entry exists")
    }

    fn remove(&mut self, term: &str) {
        if let Some(bucket) = self.by_len.get_mut(term.chars().count()) {
            if bucket.remove(term).is_some() {
                self.count -= 1;
            }
        }
    }

    fn iter(&self) -> impl Iterator<Item = (&String, &TermEntry)> {
        self.by_len.iter().flatten()
    }

    /// Buckets for term lengths `lo..=hi`.
    fn lengths(&self, lo: usize, hi: usize) -> impl Iterator<Item = &BTreeMap<String, TermEntry>> {
        self.by_len.iter().take(hi.saturating_add(1)).skip(lo)
    }
}

impl PartialEq for Dictionary {
    fn eq(&self, other: &Self) -> bool {
        self.count == other.count && self.iter().eq(other.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StoredDoc {
    doc: Arc<EnrichedDoc>,
    field_lens: [u32; FIELD_COUNT],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    terms: Dictionary,
    docs: BTreeMap<SeqNo, StoredDoc>,
    field_len_sum: [u64; FIELD_COUNT],
    policy: ExpansionPolicy,
}

fn term_frequencies(tokens: &[String]) -> BTreeMap<&str, u32> {
    let mut tf = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_str()).or_insert(0) += 1;
    }
    tf
}

fn idf(n: f64, df: u32) -> f64 {
    let df = f64::from(df);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

fn bm25(tf: u32, field_len: u32, avg_len: f64, idf: f64) -> f64 {
    let tf = f64::from(tf);
    let norm = 1.0 - BM25_B + BM25_B * f64::from(field_len) / avg_len;
    idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm)
}

/// Best contribution of one query term to one document.
#[derive(Debug, Clone, Copy)]
struct TermScore {
    seq_no: SeqNo,
    contribution: f64,
    expansion: usize,
}

struct Scorer<'a> {
    index: &'a InvertedIndex,
    n: f64,
    boosts: [f64; FIELD_COUNT],
    avg: [f64; FIELD_COUNT],
    types: [bool; TxnType::ALL.len()],
}

impl Scorer<'_> {
    /// Per-document best contribution of a query term over its expansions,
    /// sorted by sequence number. Documents of filtered-out types are
    /// skipped, and so is every document outside `candidates` when given.
    fn term_scores(&self, exps: &[Expansion], candidates: Option<&[SeqNo]>) -> Vec<TermScore> {
        let mut out = Vec::new();
        for (ei, e) in exps.iter().enumerate() {
            let entry = self
                .index
                .terms
                .get(&e.term)
                .expect("expansions come from the dictionary");
            let idf: [f64; FIELD_COUNT] = std::array::from_fn(|f| idf(self.n, entry.df[f]));
            let postings = &entry.postings;
            let (mut i, mut c) = (0, 0);
            while i < postings.len() {
                let seq = postings[i].seq_no;
                let admitted = self.types[postings[i].txn_type as usize]
                    && candidates.is_none_or(|cs| {
                        while c < cs.len() && cs[c] < seq {
                            c += 1;
                        }
                        c < cs.len() && cs[c] == seq
                    });
                let mut sum = 0.0;
                while i < postings.len() && postings[i].seq_no == seq {
                    if admitted {
                        let p = &postings[i];
                        let f = p.field.idx();
                        sum += self.boosts[f] * bm25(p.tf, p.field_len, self.avg[f], idf[f]);
                    }
                    i += 1;
                }
                if admitted {
                    out.push(TermScore {
                        seq_no: seq,
                        contribution: e.scale * sum,
                        expansion: ei,
                    });
                }
            }
        }
        if exps.len() > 1 {
            out.sort_by_key(|s| s.seq_no);
            out.dedup_by(|later, kept| {
                if later.seq_no != kept.seq_no {
                    return false;
                }
                let (a, b) = (&exps[later.expansion], &exps[kept.expansion]);
                if prefer_expansion(
                    later.contribution,
                    a.distance,
                    &a.term,
                    kept.contribution,
                    b.distance,
                    &b.term,
                ) {
                    *kept = *later;
                }
                true
            });
        }
        out
    }
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_policy(policy: ExpansionPolicy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }

    pub fn policy(&self) -> ExpansionPolicy {
        self.policy
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn get(&self, seq_no: SeqNo) -> Option<&EnrichedDoc> {
        self.docs.get(&seq_no).map(|d| d.doc.as_ref())
    }

    pub fn contains(&self, seq_no: SeqNo) -> bool {
        self.docs.contains_key(&seq_no)
    }

    pub fn documents(&self) -> impl Iterator<Item = &EnrichedDoc> {
        self.docs.values().map(|d| d.doc.as_ref())
    }

    /// Average token count of `field` over all documents (0 when empty).
    pub fn average_field_len(&self, field: Field) -> f64 {
        if self.docs.is_empty() {
            return 0.0;
        }
        self.field_len_sum[field.idx()] as f64 / self.docs.len() as f64
    }

    /// Number of documents containing `term` in `field`.
    pub fn doc_freq(&self, term: &str, field: Field) -> u32 {
        self.terms.get(term).map_or(0, |e| e.df[field.idx()])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms.get(term).map_or(&[], |e| e.postings.as_slice())
    }

    pub fn add_document(&mut self, doc: EnrichedDoc) -> Result<(), IndexError> {
        let seq_no = doc.seq_no;
        if self.docs.contains_key(&seq_no) {
            return Err(IndexError::DuplicateDocument(seq_no));
        }
        let fields = analyze_doc(&doc);
        let mut field_lens = [0u32; FIELD_COUNT];
        for field in Field::ALL {
            let tokens = &fields[field.idx()];
            let len = tokens.len() as u32;
            field_lens[field.idx()] = len;
            self.field_len_sum[field.idx()] += u64::from(len);
            for (term, tf) in term_frequencies(tokens) {
                let entry = self.terms.entry(term);
                let posting = Posting {
                    seq_no,
                    field,
                    txn_type: doc.txn_type,
                    tf,
                    field_len: len,
                };
                let key = (seq_no, field);
                let at = entry.postings.partition_point(|p| (p.seq_no, p.field) < key);
                entry.postings.insert(at, posting);
                entry.df[field.idx()] += 1;
            }
        }
        self.docs.insert(
            seq_no,
            StoredDoc {
                doc: Arc::new(doc),
                field_lens,
            },
        );
        Ok(())
    }

    pub fn remove_document(&mut self, seq_no: SeqNo) -> Result<EnrichedDoc, IndexError> {
        let stored = self.docs.remove(&seq_no).ok_or(IndexError::UnknownDocument(seq_no))?;
        let fields = analyze_doc(&stored.doc);
        for field in Field::ALL {
            self.field_len_sum[field.idx()] -= u64::from(stored.field_lens[field.idx()]);
            for term in term_frequencies(&fields[field.idx()]).into_keys() {
                let entry = self.terms.get_mut(term).expect("indexed term has an entry");
                let key = (seq_no, field);
                let at = entry.postings.partition_point(|p| (p.seq_no, p.field) < key);
                debug_assert_eq!((entry.postings[at].seq_no, entry.postings[at].field), key);
                entry.postings.remove(at);
                entry.df[field.idx()] -= 1;
                if entry.postings.is_empty() {
                    self.terms.remove(term);
                }
            }
        }
        Ok(Arc::try_unwrap(stored.doc).unwrap_or_else(|shared| (*shared).clone()))
    }

    /// Replaces a document in place (remove followed by add).
    pub fn replace_document(&mut self, doc: EnrichedDoc) -> Result<(), IndexError> {
        self.remove_document(doc.seq_no)?;
        self.add_document(doc)
    }

    /// Index terms a query term matches, with edit distance and score scale.
    ///
    /// An indexed term matches itself at distance 0 and, under the default
    /// policy, nothing else. Otherwise every term within the length-dependent
    /// edit budget matches with scale `1 - d / (budget + 1)`, and every term
    /// the query term is a strict prefix of matches at distance 0 with scale
    /// 0.5. A term reachable both ways keeps the higher scale.
    pub fn expand_term(&self, term: &str) -> Vec<Expansion> {
        let exact = self.terms.get(term).is_some();
        if exact && self.policy.exact_short_circuit {
            return vec![Expansion {
                term: term.to_string(),
                distance: 0,
                scale: 1.0,
            }];
        }
        let chars = term.chars().count();
        let budget = fuzzy::max_distance(chars);
        let mut found: BTreeMap<&str, (u32, f64)> = BTreeMap::new();
        // A term more than `budget` characters longer or shorter is always
        // more than `budget` edits away.
        for bucket in self.terms.lengths(chars.saturating_sub(budget), chars + budget) {
            for (t, d) in fuzzy::fuzzy_terms(bucket, term, budget) {
                let scale = 1.0 - d as f64 / (budget as f64 + 1.0);
                found.insert(t, (d as u32, scale));
            }
        }
        if self.policy.prefix {
            for bucket in self.terms.lengths(chars + 1, usize::MAX) {
                for t in fuzzy::prefix_terms(bucket, term) {
                    let keep_existing = found
                        .get(t)
                        .is_some_and(|&(d, s)| !prefer_expansion(PREFIX_SCALE, 0, t, s, d, t));
                    if !keep_existing {
                        found.insert(t, (0, PREFIX_SCALE));
                    }
                }
            }
        }
        found
            .into_iter()
            .map(|(t, (distance, scale))| Expansion {
                term: t.to_string(),
                distance,
                scale,
            })
            .collect()
    }

    pub fn search(&self, q: &Query, weights: &FieldWeights) -> Result<SearchResults, IndexError> {
        let terms = q.terms()?;
        weights.validate()?;
        if self.docs.is_empty() {
            return Ok(SearchResults::default());
        }
        let n = self.docs.len() as f64;
        let scorer = Scorer {
            index: self,
            n,
            boosts: weights.as_array(),
            avg: std::array::from_fn(|f| self.field_len_sum[f] as f64 / n),
            types: std::array::from_fn(|t| {
                q.type_filter
                    .as_ref()
                    .is_none_or(|types| types.contains(&TxnType::ALL[t]))
            }),
        };

        let mut expansions: Vec<Vec<Expansion>> = Vec::with_capacity(terms.len());
        for term in &terms {
            let exps = self.expand_term(term);
            if exps.is_empty() {
                return Ok(SearchResults::default());
            }
            expansions.push(exps);
        }

        // Score the rarest term first; every other term is then only scored
        // on the documents that are still candidates.
        let mut order: Vec<(usize, usize)> = expansions
            .iter()
            .enumerate()
            .map(|(ti, exps)| {
                let postings = exps.iter().map(|e| self.postings(&e.term).len()).sum();
                (postings, ti)
            })
            .collect();
        order.sort_unstable();
        let mut lists: Vec<Vec<TermScore>> = vec![Vec::new(); terms.len()];
        let mut candidates: Vec<SeqNo> = Vec::new();
        for (rank, &(_, ti)) in order.iter().enumerate() {
            let mut scores = scorer.term_scores(&expansions[ti], (rank > 0).then_some(candidates.as_slice()));
            if rank == 0 {
                if let Some(author) = &q.author {
                    scores.retain(|s| self.docs[&s.seq_no].doc.author_did == *author);
                }
            }
            candidates = scores.iter().map(|s| s.seq_no).collect();
            lists[ti] = scores;
            if candidates.is_empty() {
                return Ok(SearchResults::default());
            }
        }

        let lookup = |ti: usize, seq: SeqNo| -> TermScore {
            let list = &lists[ti];
            list[list.partition_point(|s| s.seq_no < seq)]
        };
        let mut scored: Vec<(SeqNo, f64)> = candidates
            .iter()
            .map(|&seq| {
                let mut score = 0.0;
                for ti in 0..terms.len() {
                    score += lookup(ti, seq).contribution;
                }
                (seq, score)
            })
            .collect();

        let total = scored.len();
        let end = q.offset.saturating_add(q.limit).min(total);
        let rank = |a: &(SeqNo, f64), b: &(SeqNo, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if end == 0 {
            scored.clear();
        } else if end < total {
            scored.select_nth_unstable_by(end - 1, rank);
            scored.truncate(end);
        }
        scored.sort_by(rank);
        let hits = scored
            .into_iter()
            .skip(q.offset)
            .map(|(seq, score)| ScoredHit {
                seq_no: seq,
                score,
                matched_terms: terms
                    .iter()
                    .enumerate()
                    .map(|(ti, term)| {
                        let e = &expansions[ti][lookup(ti, seq).expansion];
                        TermMatch {
                            query_term: term.clone(),
                            index_term: e.term.clone(),
                            distance: e.distance,
                        }
                    })
                    .collect(),
            })
            .collect();
        Ok(SearchResults { total, hits })
    }

    /// Checks the internal bookkeeping; used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut lens: BTreeMap<(SeqNo, Field), u32> = BTreeMap::new();
        for (term, entry) in self.terms.iter() {
            if entry.postings.is_empty() {
                return Err(format!("term {term} has no postings"));
            }
            let mut df = [0u32; FIELD_COUNT];
            for w in entry.postings.windows(2) {
                if (w[0].seq_no, w[0].field) >= (w[1].seq_no, w[1].field) {
                    return Err(format!("postings of {term} not strictly sorted"));
                }
            }
            for p in &entry.postings {
                df[p.field.idx()] += 1;
                *lens.entry((p.seq_no, p.field)).or_insert(0) += p.tf;
                let stored = self
                    .docs
                    .get(&p.seq_no)
                    .ok_or(format!("posting for missing doc {}", p.seq_no))?;
                if stored.field_lens[p.field.idx()] != p.field_len {
                    return Err(format!("stale field length for {term} in {}", p.seq_no));
                }
            }
            if df != entry.df {
                return Err(format!("df mismatch for {term}"));
            }
        }
        let mut sums = [0u64; FIELD_COUNT];
        for (seq, stored) in &self.docs {
            for field in Field::ALL {
                let len = stored.field_lens[field.idx()];
                sums[field.idx()] += u64::from(len);
                if lens.get(&(*seq, field)).copied().unwrap_or(0) != len {
                    return Err(format!("tf sum mismatch for doc {seq} field {field}"));
                }
            }
        }
        if sums != self.field_len_sum {
            return Err("field length sums out of date".into());
        }
        Ok(())
    }
}
