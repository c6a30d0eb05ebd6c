//! Reference implementations and seeded data generators shared by the
//! integration suites.
//!
//! The scorers here are written independently of the library: straight
//! from raw token lists, with the textbook recurrences, so a bug in the
//! library's incremental structures cannot hide in its own oracle.

#![allow(dead_code)] // each test binary uses its own subset

use std::collections::HashMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
pub use rand_chacha::rand_core::RngCore;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[(rng.next_u64() % items.len() as u64) as usize]
}

/// Uniform integer in `lo..=hi`.
pub fn pick_range(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize
}

/// Textbook Levenshtein distance over token sequences with unit costs,
/// as the full dynamic-programming table.
pub fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Score every document for `query` straight from raw token lists with
/// the Okapi BM25 formula: per distinct query term (first-occurrence
/// order, weighted by its count in the query),
/// `max(0, ln((N-df+0.5)/(df+0.5))) * tf*(k1+1)/(tf + k1*(1-b+b*dl/avdl))`.
/// Returns `(doc_id, score)` for positive scores, sorted by descending
/// score then ascending id.
pub fn brute_force_bm25(
    docs: &[(String, Vec<String>)],
    query: &[String],
    k1: f64,
    b: f64,
) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let avdl = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    // Distinct query terms in first-occurrence order, with counts.
    let mut terms: Vec<(&String, f64)> = Vec::new();
    for t in query {
        match terms.iter_mut().find(|(s, _)| *s == t) {
            Some((_, c)) => *c += 1.0,
            None => terms.push((t, 1.0)),
        }
    }
    let mut out = Vec::new();
    for (id, tokens) in docs {
        let dl = tokens.len() as f64;
        let mut score = 0.0;
        for (term, qtf) in &terms {
            let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let tf = tokens.iter().filter(|t| t == term).count() as f64;
            if tf == 0.0 || df == 0.0 {
                continue;
            }
            let idf = ((n - df + 0.5) / (df + 0.5)).ln().max(0.0);
            score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avdl)) * qtf;
        }
        if score > 0.0 {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    out
}

/// A pseudo-word from a pool of `pool` distinct shapes, drawn with a
/// mild bias toward low indices so term frequencies vary.
pub fn random_word(rng: &mut ChaCha8Rng, pool: usize) -> String {
    let r = next_f64(rng);
    let idx = ((r * r) * pool as f64) as usize % pool;
    format!("w{idx:03}")
}

pub fn random_tokens(rng: &mut ChaCha8Rng, pool: usize, max_len: usize) -> Vec<String> {
    let len = pick_range(rng, 1, max_len);
    (0..len).map(|_| random_word(rng, pool)).collect()
}

/// A corpus of up to `max_docs` documents (at least 2), each 1..=40
/// tokens, as `(doc_id, tokens)` pairs.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    max_docs: usize,
    pool: usize,
) -> Vec<(String, Vec<String>)> {
    let n = pick_range(rng, 2, max_docs);
    (0..n)
        .map(|i| (format!("doc{i:03}"), random_tokens(rng, pool, 40)))
        .collect()
}

/// A query of 1..=max_len tokens: mostly pool words (some repeated),
/// occasionally a shape no document can contain.
pub fn random_query(rng: &mut ChaCha8Rng, pool: usize, max_len: usize) -> Vec<String> {
    let len = pick_range(rng, 1, max_len);
    (0..len)
        .map(|_| {
            if next_f64(rng) < 0.08 {
                "zzz-never-in-corpus".to_string()
            } else {
                random_word(rng, pool)
            }
        })
        .collect()
}

/// Exact token counts per term, for posting-list invariants.
pub fn term_counts(docs: &[(String, Vec<String>)]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for (_, tokens) in docs {
        for t in tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}
