//! Inverted index and Okapi BM25 ranking.
//!
//! Documents are indexed by their content words (tokenized, stopword-
//! filtered). The dictionary is a `BTreeMap` so every walk over the terms
//! is deterministic, which in turn makes index serialization and search
//! results reproducible byte for byte.
//!
//! The score of document `d` for query `q`:
//!
//! ```text
//! score(d, q) = sum over distinct t in q of
//!     w(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avdl)) * qtf
//! w(t) = max(0, ln((N - df + 0.5) / (df + 0.5)))
//! ```
//!
//! with `tf` the in-document frequency, `qtf` the in-query frequency,
//! `dl` the document's content-word count, and `avdl` its collection
//! mean. Query terms missing from the dictionary contribute nothing.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{extract_content_words, tokenize, Collection, TokenizerConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// BM25 free parameters. `k1` controls term-frequency saturation, `b`
/// document-length normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OkapiParams<R: Real = f64> {
    #[serde(default = "default_k1")]
    pub k1: R,
    #[serde(default = "default_b")]
    pub b: R,
}

fn default_k1<R: Real>() -> R {
    R::cast(1.2)
}

fn default_b<R: Real>() -> R {
    R::cast(0.75)
}

impl<R: Real> Default for OkapiParams<R> {
    fn default() -> Self {
        OkapiParams { k1: default_k1(), b: default_b() }
    }
}

impl<R: Real> OkapiParams<R> {
    pub fn new(k1: R, b: R) -> Result<Self> {
        if !(k1 >= R::zero()) {
            return Err(Error::InvalidParam(format!("k1 must be >= 0, got {k1}")));
        }
        if !(b >= R::zero() && b <= R::one()) {
            return Err(Error::InvalidParam(format!("b must be in [0, 1], got {b}")));
        }
        Ok(OkapiParams { k1, b })
    }
}

/// One posting: a document ordinal and the term's frequency there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// A ranked search hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc<R: Real = f64> {
    pub doc_id: String,
    pub score: R,
}

/// Inverted index over one collection's content words.
///
/// Also remembers the tokenizer configuration it was built with, so a
/// reloaded index processes queries the same way the documents were
/// processed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    length_sum: u64,
    postings: BTreeMap<String, Vec<Posting>>,
    lowercase: bool,
    stopwords: Vec<String>,
}

impl InvertedIndex {
    /// Index every document in `collection` under `config`. Errors on an
    /// empty collection; documents whose text yields no content words are
    /// kept with length zero.
    pub fn build(collection: &Collection, config: &TokenizerConfig) -> Result<Self> {
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(collection.len());
        let mut doc_lengths = Vec::with_capacity(collection.len());
        let mut length_sum = 0u64;
        for (ord, doc) in collection.docs().iter().enumerate() {
            let terms = extract_content_words(&tokenize(&doc.text, config), config);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in &terms {
                *tf.entry(t.as_str()).or_insert(0) += 1;
            }
            doc_ids.push(doc.doc_id.clone());
            doc_lengths.push(terms.len() as u32);
            length_sum += terms.len() as u64;
            for (term, count) in tf {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc: ord as u32, tf: count });
            }
        }
        // Per-term insertion order above follows document order already,
        // but make it explicit: postings are sorted by ordinal.
        for list in postings.values_mut() {
            list.sort_by_key(|p| p.doc);
        }
        let mut stopwords: Vec<String> = config.stopwords.iter().cloned().collect();
        stopwords.sort();
        Ok(InvertedIndex {
            doc_ids,
            doc_lengths,
            length_sum,
            postings,
            lowercase: config.lowercase,
            stopwords,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_id(&self, ordinal: usize) -> &str {
        &self.doc_ids[ordinal]
    }

    pub fn doc_ordinal(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == doc_id)
    }

    pub fn doc_length(&self, ordinal: usize) -> u32 {
        self.doc_lengths[ordinal]
    }

    pub fn average_doc_length<R: Real>(&self) -> R {
        if self.doc_ids.is_empty() {
            return R::zero();
        }
        R::from_count(self.length_sum) / R::from_count(self.doc_ids.len() as u64)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, |l| l.len())
    }

    pub fn term_frequency(&self, term: &str, ordinal: usize) -> u32 {
        self.postings
            .get(term)
            .and_then(|l| {
                l.binary_search_by_key(&(ordinal as u32), |p| p.doc)
                    .ok()
                    .map(|i| l[i].tf)
            })
            .unwrap_or(0)
    }

    /// The tokenizer configuration the index was built with, for
    /// processing queries identically.
    pub fn tokenizer_config(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: self.lowercase,
            stopwords: self.stopwords.iter().cloned().collect(),
        }
    }

    /// Robertson-Sparck Jones weight with the negative tail clamped to
    /// zero, so very common terms degrade to no-ops instead of penalties.
    fn idf<R: Real>(&self, df: usize) -> R {
        let n = R::from_count(self.doc_ids.len() as u64);
        let df = R::from_count(df as u64);
        let half = R::cast(0.5);
        let w = ((n - df + half) / (df + half)).ln();
        w.max(R::zero())
    }

    /// Score one document against a query, straight from the formula.
    /// `query_terms` is the raw (unnormalized-for-frequency) term stream;
    /// duplicates become `qtf`. `ordinal` must be a valid document
    /// ordinal; absent terms contribute zero.
    pub fn okapi_score<R: Real>(
        &self,
        query_terms: &[String],
        ordinal: usize,
        params: &OkapiParams<R>,
    ) -> R {
        assert!(ordinal < self.doc_ids.len(), "document ordinal out of range");
        let mut score = R::zero();
        let dl = R::from_count(self.doc_lengths[ordinal] as u64);
        let avdl = self.average_doc_length::<R>();
        for (term, qtf) in distinct_with_counts(query_terms) {
            let df = self.document_frequency(term);
            if df == 0 {
                continue;
            }
            let tf = self.term_frequency(term, ordinal);
            if tf == 0 {
                continue;
            }
            score += self.term_contribution(df, tf, dl, avdl, qtf, params);
        }
        score
    }

    fn term_contribution<R: Real>(
        &self,
        df: usize,
        tf: u32,
        dl: R,
        avdl: R,
        qtf: u32,
        params: &OkapiParams<R>,
    ) -> R {
        let tf = R::from_count(tf as u64);
        let qtf = R::from_count(qtf as u64);
        let norm = R::one() - params.b + params.b * dl / avdl;
        let sat = tf * (params.k1 + R::one()) / (tf + params.k1 * norm);
        self.idf::<R>(df) * sat * qtf
    }

    /// Rank the collection for a query and return the top `k` documents
    /// with strictly positive scores, ordered by descending score and
    /// ascending `doc_id` on ties. An empty or fully out-of-dictionary
    /// query yields an empty result.
    pub fn search<R: Real>(
        &self,
        query_terms: &[String],
        k: usize,
        params: &OkapiParams<R>,
    ) -> Result<Vec<ScoredDoc<R>>> {
        if k == 0 {
            return Err(Error::InvalidParam("k must be >= 1".into()));
        }
        let avdl = self.average_doc_length::<R>();
        let mut scores: Vec<R> = vec![R::zero(); self.doc_ids.len()];
        for (term, qtf) in distinct_with_counts(query_terms) {
            let Some(list) = self.postings.get(term) else { continue };
            let df = list.len();
            for p in list {
                let dl = R::from_count(self.doc_lengths[p.doc as usize] as u64);
                scores[p.doc as usize] +=
                    self.term_contribution(df, p.tf, dl, avdl, qtf, params);
            }
        }
        let mut hits: Vec<ScoredDoc<R>> = scores
            .into_iter()
            .enumerate()
            .filter(|(_, s)| *s > R::zero())
            .map(|(ord, score)| ScoredDoc { doc_id: self.doc_ids[ord].clone(), score })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        hits.truncate(k);
        Ok(hits)
    }

    /// Write the index as JSON. The format is an implementation detail of
    /// this crate, stable enough for artifacts within one version.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self).expect("index serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw)
            .map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))
    }
}

/// Query terms deduplicated in order of first occurrence, each with its
/// query frequency. The fixed order keeps score accumulation, and thus
/// floating-point results, reproducible.
fn distinct_with_counts(terms: &[String]) -> Vec<(&str, u32)> {
    let mut order: Vec<(&str, u32)> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for t in terms {
        match seen.get(t.as_str()) {
            Some(&i) => order[i].1 += 1,
            None => {
                seen.insert(t.as_str(), order.len());
                order.push((t.as_str(), 1));
            }
        }
    }
    order
}
