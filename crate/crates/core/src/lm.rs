//! N-gram language models with Witten-Bell interpolation.
//!
//! Models are trained over a closed vocabulary: the top `v_max` types by
//! training frequency plus three reserved symbols — `<unk>` for
//! out-of-vocabulary tokens, `<s>` / `</s>` for sentence boundaries. The
//! reserved symbols do not count against `v_max`. Training text is split
//! into sentences on terminal punctuation ([`crate::corpus::segment_sentences`]),
//! each sentence wrapped in `<s>` ... `</s>`; `</s>` is a predicted event,
//! `<s>` never is.
//!
//! The conditional at order `n` interpolates with the order below:
//!
//! ```text
//! p_n(w | h) = (c(h, w) + T(h) * p_{n-1}(w | h')) / (c(h) + T(h))
//! ```
//!
//! where `T(h)` is the number of distinct types seen after `h` and `h'`
//! drops the oldest word of `h`. A context never seen in training backs
//! off entirely: `p_n(w | h) = p_{n-1}(w | h')`. The chain bottoms out at
//! the uniform floor `1 / |closed vocabulary|`, which makes every
//! conditional strictly positive and each distribution sum to one.
//!
//! Only counts are stored; probabilities are computed on demand, generic
//! over the scalar type.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{segment_sentences, tokenize, Collection, TokenizerConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub type WordId = u32;

pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

pub const UNK_ID: WordId = 0;
pub const BOS_ID: WordId = 1;
pub const EOS_ID: WordId = 2;

const RESERVED: [&str; 3] = [UNK_TOKEN, BOS_TOKEN, EOS_TOKEN];

/// Closed word list with the three reserved symbols always present.
/// Word ids: 0 = `<unk>`, 1 = `<s>`, 2 = `</s>`, then the selected words
/// in rank order (descending training frequency, ties lexicographic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, WordId>,
    v_max: usize,
}

impl Vocabulary {
    /// Build from an explicit word list (already ordered). Rejects
    /// duplicates, empty strings, and the reserved symbols.
    pub fn from_words(words: Vec<String>, v_max: usize) -> Result<Self> {
        if v_max == 0 {
            return Err(Error::InvalidParam("v_max must be >= 1".into()));
        }
        if words.len() > v_max {
            return Err(Error::InvalidParam(format!(
                "{} words exceed v_max = {v_max}",
                words.len()
            )));
        }
        let mut ids = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || RESERVED.contains(&w.as_str()) {
                return Err(Error::InvalidParam(format!("invalid vocabulary word {w:?}")));
            }
            if ids.insert(w.clone(), 3 + i as WordId).is_some() {
                return Err(Error::InvalidParam(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Vocabulary { words, ids, v_max })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        match token {
            UNK_TOKEN => Some(UNK_ID),
            BOS_TOKEN => Some(BOS_ID),
            EOS_TOKEN => Some(EOS_ID),
            _ => self.ids.get(token).copied(),
        }
    }

    /// Map a token to its id, folding out-of-vocabulary tokens to `<unk>`.
    pub fn id_or_unk(&self, token: &str) -> WordId {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn word(&self, id: WordId) -> &str {
        match id {
            UNK_ID => UNK_TOKEN,
            BOS_ID => BOS_TOKEN,
            EOS_ID => EOS_TOKEN,
            _ => &self.words[id as usize - 3],
        }
    }

    /// Number of selected (non-reserved) words.
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// Size of the closed vocabulary: selected words plus the three
    /// reserved symbols. This is the denominator of the uniform floor.
    pub fn closed_size(&self) -> usize {
        self.words.len() + 3
    }

    pub fn v_max(&self) -> usize {
        self.v_max
    }

    /// Selected words in rank order.
    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Corpus-level statistics reported by [`build_vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LmStats<R: Real = f64> {
    /// Distinct types in the training stream (before the `v_max` cut).
    pub types: usize,
    /// Total training tokens.
    pub tokens: u64,
    /// Fraction of training tokens covered by the selected vocabulary.
    pub coverage: R,
}

/// Tokenize a document the way the language-model side sees it:
/// sentence by sentence. Returns one token vector per non-empty sentence.
pub fn lm_sentences(text: &str, config: &TokenizerConfig) -> Vec<Vec<String>> {
    segment_sentences(text)
        .into_iter()
        .map(|s| tokenize(s, config))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Select the top `v_max` types by descending frequency (ties broken by
/// ascending lexicographic order) over the collection's sentence-split
/// token stream. Stopwords are never removed here.
pub fn build_vocabulary<R: Real>(
    collection: &Collection,
    config: &TokenizerConfig,
    v_max: usize,
) -> Result<(Vocabulary, LmStats<R>)> {
    if collection.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if v_max == 0 {
        return Err(Error::InvalidParam("v_max must be >= 1".into()));
    }
    let mut freq: HashMap<String, u64> = HashMap::new();
    let mut tokens = 0u64;
    for doc in collection.docs() {
        for sentence in lm_sentences(&doc.text, config) {
            tokens += sentence.len() as u64;
            for t in sentence {
                *freq.entry(t).or_insert(0) += 1;
            }
        }
    }
    let types = freq.len();
    let mut ranked: Vec<(String, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(v_max);
    let covered: u64 = ranked.iter().map(|(_, c)| c).sum();
    let coverage = if tokens == 0 {
        R::one()
    } else {
        R::from_count(covered) / R::from_count(tokens)
    };
    let words = ranked.into_iter().map(|(w, _)| w).collect();
    let vocab = Vocabulary::from_words(words, v_max)?;
    Ok((vocab, LmStats { types, tokens, coverage }))
}

/// Count of every word observed after one context.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct ContextCounts {
    total: u64,
    followers: HashMap<WordId, u64>,
}

/// Witten-Bell n-gram model. `levels[k]` holds the (k+1)-gram counts,
/// keyed by the k-word context; `levels[0]` has the single empty context.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    levels: Vec<HashMap<Vec<WordId>, ContextCounts>>,
}

/// Log-probability of one token sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceScore<R: Real = f64> {
    /// Base-2 log of the sequence probability, `</s>` included.
    pub log2_prob: R,
    /// Tokens that fell outside the vocabulary (mapped to `<unk>`).
    pub oov_count: usize,
    /// Number of scored events: the tokens plus the closing `</s>`.
    pub scored_tokens: usize,
}

/// Perplexity and out-of-vocabulary rate over a test collection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PerplexityReport<R: Real = f64> {
    pub perplexity: R,
    pub oov_rate: R,
}

impl NGramModel {
    /// Train an order-1, -2, or -3 model. Counts are collected for every
    /// order up to `order`, so truncated histories at sentence starts are
    /// answered by the matching lower level.
    pub fn train(
        collection: &Collection,
        vocab: Vocabulary,
        order: usize,
        config: &TokenizerConfig,
    ) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidOrder { order });
        }
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut levels: Vec<HashMap<Vec<WordId>, ContextCounts>> =
            vec![HashMap::new(); order];
        for doc in collection.docs() {
            for sentence in lm_sentences(&doc.text, config) {
                let mut padded = Vec::with_capacity(sentence.len() + 2);
                padded.push(BOS_ID);
                padded.extend(sentence.iter().map(|t| vocab.id_or_unk(t)));
                padded.push(EOS_ID);
                // Predict every position except the leading <s>.
                for end in 1..padded.len() {
                    let word = padded[end];
                    for n in 1..=order {
                        if end + 1 < n {
                            continue;
                        }
                        let ctx = &padded[end + 1 - n..end];
                        let entry = levels[n - 1].entry(ctx.to_vec()).or_default();
                        entry.total += 1;
                        *entry.followers.entry(word).or_insert(0) += 1;
                    }
                }
            }
        }
        Ok(NGramModel { order, vocab, levels })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// How often `history` was observed as a context at level
    /// `history.len() + 1`, or `None` if the model never saw it (in which
    /// case [`cond_prob`](Self::cond_prob) answers from the next shorter
    /// history).
    pub fn context_total(&self, history: &[WordId]) -> Option<u64> {
        self.levels.get(history.len())?.get(history).map(|c| c.total)
    }

    /// Uniform floor at the bottom of the interpolation chain.
    fn p0<R: Real>(&self) -> R {
        R::one() / R::from_count(self.vocab.closed_size() as u64)
    }

    /// `p(word | history)`, with `history.len() < order`. The history is
    /// the most recent words, oldest first; pass `&[]` for the unigram
    /// distribution.
    pub fn cond_prob<R: Real>(&self, history: &[WordId], word: WordId) -> R {
        assert!(
            history.len() < self.order,
            "history of {} words needs an order-{} model",
            history.len(),
            history.len() + 1
        );
        let lower = if history.is_empty() {
            self.p0::<R>()
        } else {
            self.cond_prob::<R>(&history[1..], word)
        };
        match self.levels[history.len()].get(history) {
            None => lower,
            Some(ctx) => {
                let c_hw = ctx.followers.get(&word).copied().unwrap_or(0);
                let t = R::from_count(ctx.followers.len() as u64);
                let c_h = R::from_count(ctx.total);
                (R::from_count(c_hw) + t * lower) / (c_h + t)
            }
        }
    }

    /// Score a tokenized sentence: wrap in `<s>` ... `</s>`, map
    /// out-of-vocabulary tokens to `<unk>`, and sum base-2 logs of the
    /// conditionals. The closing `</s>` is scored; the opening `<s>` is
    /// context only.
    pub fn sequence_logprob<R: Real>(&self, tokens: &[String]) -> SequenceScore<R> {
        let oov_count = tokens.iter().filter(|t| !self.vocab.contains(t)).count();
        let mut padded = Vec::with_capacity(tokens.len() + 2);
        padded.push(BOS_ID);
        padded.extend(tokens.iter().map(|t| self.vocab.id_or_unk(t)));
        padded.push(EOS_ID);
        let mut log2_prob = R::zero();
        for i in 1..padded.len() {
            let start = i.saturating_sub(self.order - 1);
            let p: R = self.cond_prob(&padded[start..i], padded[i]);
            log2_prob += p.log2();
        }
        SequenceScore { log2_prob, oov_count, scored_tokens: tokens.len() + 1 }
    }

    /// Perplexity `2^(-L/N)` over all sentences of a test collection,
    /// where `L` sums sentence log2-probabilities and `N` counts scored
    /// events. The OOV rate's denominator excludes the `</s>` events.
    pub fn perplexity<R: Real>(
        &self,
        collection: &Collection,
        config: &TokenizerConfig,
    ) -> Result<PerplexityReport<R>> {
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut log2_sum = R::zero();
        let mut scored = 0u64;
        let mut words = 0u64;
        let mut oov = 0u64;
        for doc in collection.docs() {
            for sentence in lm_sentences(&doc.text, config) {
                let s: SequenceScore<R> = self.sequence_logprob(&sentence);
                log2_sum += s.log2_prob;
                scored += s.scored_tokens as u64;
                words += sentence.len() as u64;
                oov += s.oov_count as u64;
            }
        }
        if scored == 0 {
            return Err(Error::NoTokens);
        }
        let perplexity = (-(log2_sum / R::from_count(scored))).exp2();
        let oov_rate = R::from_count(oov) / R::from_count(words);
        Ok(PerplexityReport { perplexity, oov_rate })
    }

    /// Serialize to the plain-text model format:
    ///
    /// ```text
    /// ngram-lm <TAB> order <TAB> v_max <TAB> <unk> <TAB> <s> <TAB> </s>
    /// vocab <TAB> word-count
    /// ...one word per line, rank order...
    /// counts <TAB> n <TAB> entry-count        (for n = 1 ..= order)
    /// context <TAB> word <TAB> count          (context space-joined, "" for n=1)
    /// ```
    ///
    /// Entries are sorted by context then word, so saving is
    /// deterministic and a save/load/save cycle is byte-identical.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "ngram-lm\t{}\t{}\t{UNK_TOKEN}\t{BOS_TOKEN}\t{EOS_TOKEN}",
            self.order,
            self.vocab.v_max()
        )
        .unwrap();
        writeln!(out, "vocab\t{}", self.vocab.word_count()).unwrap();
        for w in self.vocab.words() {
            writeln!(out, "{w}").unwrap();
        }
        for n in 1..=self.order {
            let level = &self.levels[n - 1];
            let mut entries: Vec<(String, &str, u64)> = Vec::new();
            for (ctx, counts) in level {
                let ctx_str = ctx
                    .iter()
                    .map(|&id| self.vocab.word(id))
                    .collect::<Vec<_>>()
                    .join(" ");
                for (&word, &count) in &counts.followers {
                    entries.push((ctx_str.clone(), self.vocab.word(word), count));
                }
            }
            entries.sort();
            writeln!(out, "counts\t{n}\t{}", entries.len()).unwrap();
            for (ctx, word, count) in entries {
                writeln!(out, "{ctx}\t{word}\t{count}").unwrap();
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn from_text(raw: &str, path: &Path) -> Result<Self> {
        let fail = |line: usize, reason: &str| Error::ModelFormat {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = raw.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| fail(1, "empty file"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 6 || fields[0] != "ngram-lm" {
            return Err(fail(1, "bad header"));
        }
        let order: usize = fields[1].parse().map_err(|_| fail(1, "bad order"))?;
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidOrder { order });
        }
        let v_max: usize = fields[2].parse().map_err(|_| fail(1, "bad v_max"))?;
        if [fields[3], fields[4], fields[5]] != RESERVED {
            return Err(fail(1, "unexpected reserved symbols"));
        }
        let (lineno, vocab_line) = lines.next().ok_or_else(|| fail(2, "missing vocab section"))?;
        let vf: Vec<&str> = vocab_line.split('\t').collect();
        if vf.len() != 2 || vf[0] != "vocab" {
            return Err(fail(lineno + 1, "expected vocab section"));
        }
        let word_count: usize = vf[1].parse().map_err(|_| fail(lineno + 1, "bad word count"))?;
        let mut words = Vec::with_capacity(word_count);
        for _ in 0..word_count {
            let (lineno, w) = lines.next().ok_or_else(|| fail(0, "vocab truncated"))?;
            if w.is_empty() {
                return Err(fail(lineno + 1, "empty vocabulary word"));
            }
            words.push(w.to_string());
        }
        let vocab = Vocabulary::from_words(words, v_max)?;
        let mut levels: Vec<HashMap<Vec<WordId>, ContextCounts>> = vec![HashMap::new(); order];
        for n in 1..=order {
            let (lineno, counts_line) =
                lines.next().ok_or_else(|| fail(0, "missing counts section"))?;
            let cf: Vec<&str> = counts_line.split('\t').collect();
            if cf.len() != 3 || cf[0] != "counts" || cf[1] != n.to_string() {
                return Err(fail(lineno + 1, "expected counts section"));
            }
            let entries: usize = cf[2].parse().map_err(|_| fail(lineno + 1, "bad entry count"))?;
            for _ in 0..entries {
                let (lineno, line) = lines.next().ok_or_else(|| fail(0, "counts truncated"))?;
                let mut parts = line.splitn(3, '\t');
                let (ctx_str, word, count) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(c), Some(w), Some(n)) => (c, w, n),
                    _ => return Err(fail(lineno + 1, "expected context\\tword\\tcount")),
                };
                let ctx: Vec<WordId> = if ctx_str.is_empty() {
                    Vec::new()
                } else {
                    ctx_str
                        .split(' ')
                        .map(|w| vocab.id(w).ok_or_else(|| fail(lineno + 1, "unknown context word")))
                        .collect::<Result<_>>()?
                };
                if ctx.len() != n - 1 {
                    return Err(fail(lineno + 1, "context length does not match section order"));
                }
                let word_id = vocab.id(word).ok_or_else(|| fail(lineno + 1, "unknown word"))?;
                let count: u64 = count.parse().map_err(|_| fail(lineno + 1, "bad count"))?;
                let entry = levels[n - 1].entry(ctx).or_default();
                entry.total += count;
                if entry.followers.insert(word_id, count).is_some() {
                    return Err(fail(lineno + 1, "duplicate count entry"));
                }
            }
        }
        if let Some((lineno, line)) = lines.next() {
            if !line.trim().is_empty() {
                return Err(fail(lineno + 1, "trailing content"));
            }
        }
        Ok(NGramModel { order, vocab, levels })
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&raw, path)
    }
}

/// Fraction of the collection's (sentence-split) tokens that are
/// vocabulary members.
pub fn coverage<R: Real>(
    vocab: &Vocabulary,
    collection: &Collection,
    config: &TokenizerConfig,
) -> Result<R> {
    if collection.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let mut total = 0u64;
    let mut covered = 0u64;
    for doc in collection.docs() {
        for sentence in lm_sentences(&doc.text, config) {
            total += sentence.len() as u64;
            covered += sentence.iter().filter(|t| vocab.contains(t)).count() as u64;
        }
    }
    if total == 0 {
        return Err(Error::NoTokens);
    }
    Ok(R::from_count(covered) / R::from_count(total))
}
