//! Linear-scan reference search with the same contract as
//! [`InvertedIndex::search`](super::InvertedIndex::search).
//!
//! Nothing here touches the inverted index: statistics are recounted from the
//! documents on every call, and candidate terms are found by computing the
//! full edit-distance matrix against every distinct token in the corpus.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::analyzer::{analyze_doc, FIELD_COUNT};
use super::fuzzy::{max_distance, osa_distance};
use super::{paginate, prefer_expansion, ExpansionPolicy, FieldWeights, IndexError, Query, ScoredHit, TermMatch};
use crate::enrich::EnrichedDoc;

pub fn brute_force_search(
    docs: &[EnrichedDoc],
    q: &Query,
    weights: &FieldWeights,
) -> Result<super::SearchResults, IndexError> {
    brute_force_search_with(docs, q, weights, ExpansionPolicy::default())
}

pub fn brute_force_search_with(
    docs: &[EnrichedDoc],
    q: &Query,
    weights: &FieldWeights,
    policy: ExpansionPolicy,
) -> Result<super::SearchResults, IndexError> {
    let terms = q.terms()?;
    weights.validate()?;
    if docs.is_empty() {
        return Ok(super::SearchResults::default());
    }
    let boosts = weights.as_array();

    let analyzed: Vec<[Vec<String>; FIELD_COUNT]> = docs.iter().map(analyze_doc).collect();
    let n = docs.len() as f64;
    let mut avg = [0.0f64; FIELD_COUNT];
    for f in 0..FIELD_COUNT {
        let total: usize = analyzed.iter().map(|a| a[f].len()).sum();
        avg[f] = total as f64 / n;
    }
    let mut vocabulary: BTreeSet<&str> = BTreeSet::new();
    for a in &analyzed {
        for field in a {
            vocabulary.extend(field.iter().map(String::as_str));
        }
    }

    // Candidate index terms for each query term: (term, distance, scale).
    let mut candidates: Vec<Vec<(&str, u32, f64)>> = Vec::new();
    for term in &terms {
        let mut list: BTreeMap<&str, (u32, f64)> = BTreeMap::new();
        let present = vocabulary.contains(term.as_str());
        if present {
            list.insert(vocabulary.get(term.as_str()).unwrap(), (0, 1.0));
        }
        if !(present && policy.exact_short_circuit) {
            let budget = max_distance(term.chars().count());
            for &v in &vocabulary {
                let d = osa_distance(term, v);
                let mut best: Option<(u32, f64)> = None;
                if d <= budget && (d > 0 || !present) {
                    best = Some((d as u32, 1.0 - d as f64 / (budget as f64 + 1.0)));
                }
                if policy.prefix && v.len() > term.len() && v.starts_with(term.as_str()) {
                    best = match best {
                        Some((bd, bs)) if !prefer_expansion(0.5, 0, v, bs, bd, v) => Some((bd, bs)),
                        _ => Some((0, 0.5)),
                    };
                }
                if let Some(b) = best {
                    list.insert(v, b);
                }
            }
        }
        if list.is_empty() {
            return Ok(super::SearchResults::default());
        }
        candidates.push(list.into_iter().map(|(t, (d, s))| (t, d, s)).collect());
    }

    // Document frequency per (term, field), counted only for candidate terms.
    let wanted: BTreeSet<&str> = candidates.iter().flatten().map(|c| c.0).collect();
    let mut df: HashMap<&str, [u32; FIELD_COUNT]> = HashMap::new();
    for a in &analyzed {
        for (f, tokens) in a.iter().enumerate() {
            let distinct: BTreeSet<&str> = tokens
                .iter()
                .map(String::as_str)
                .filter(|t| wanted.contains(t))
                .collect();
            for t in distinct {
                df.entry(t).or_insert([0; FIELD_COUNT])[f] += 1;
            }
        }
    }

    let mut hits = Vec::new();
    'docs: for (doc, a) in docs.iter().zip(&analyzed) {
        let mut score = 0.0;
        let mut matched = Vec::new();
        for (term, cands) in terms.iter().zip(&candidates) {
            let mut best: Option<(f64, &str, u32)> = None;
            for &(cand, dist, scale) in cands {
                let mut sum = 0.0;
                let mut present = false;
                for f in 0..FIELD_COUNT {
                    let tf = a[f].iter().filter(|t| t.as_str() == cand).count();
                    if tf == 0 {
                        continue;
                    }
                    present = true;
                    let len = a[f].len() as f64;
                    let dfv = f64::from(df[cand][f]);
                    let idf = (1.0 + (n - dfv + 0.5) / (dfv + 0.5)).ln();
                    let tf = tf as f64;
                    let norm = 1.0 - 0.75 + 0.75 * len / avg[f];
                    sum += boosts[f] * (idf * tf * (1.2 + 1.0) / (tf + 1.2 * norm));
                }
                if !present {
                    continue;
                }
                let c = scale * sum;
                let better = match best {
                    None => true,
                    Some((bc, bt, bd)) => prefer_expansion(c, dist, cand, bc, bd, bt),
                };
                if better {
                    best = Some((c, cand, dist));
                }
            }
            let Some((c, cand, dist)) = best else { continue 'docs };
            score += c;
            matched.push(TermMatch {
                query_term: term.clone(),
                index_term: cand.to_string(),
                distance: dist,
            });
        }
        if q.admits(doc) {
            hits.push(ScoredHit {
                seq_no: doc.seq_no,
                score,
                matched_terms: matched,
            });
        }
    }
    Ok(paginate(hits, q))
}
