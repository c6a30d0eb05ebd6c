//! Document collections, tokenization, and content-word extraction.
//!
//! Two interchange formats are supported: JSON Lines (one
//! `{"doc_id": ..., "text": ...}` object per line) and TREC-style SGML
//! (`<DOC>` records carrying `<DOCNO>` and `<TEXT>`). Tokenization follows
//! UAX #29 word boundaries — word-like segments only, so punctuation runs
//! vanish — with optional lowercasing (on by default). Stopword filtering
//! is a separate step ([`extract_content_words`]) so that language-model
//! training can see the full token stream while the retrieval side works
//! on content words.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

/// English function words compiled into the crate. Loaded into every
/// default [`TokenizerConfig`]; replace via [`TokenizerConfig::with_stopword_file`].
const BUNDLED_STOPLIST: &str = include_str!("../data/stopwords_en.txt");

/// Short human-readable statement of the segmentation rule, for run
/// metadata and `--help` text.
pub const TOKEN_PATTERN: &str = "UAX #29 word boundaries, word-like segments only";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollectionFormat {
    /// One JSON object per line with `doc_id` and `text` keys.
    Jsonl,
    /// `<DOC>` records with `<DOCNO>` and `<TEXT>` children.
    TrecSgml,
}

impl CollectionFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "jsonl" => Ok(CollectionFormat::Jsonl),
            "trec-sgml" | "trec" | "sgml" => Ok(CollectionFormat::TrecSgml),
            other => Err(Error::InvalidParam(format!(
                "unknown collection format {other:?} (expected jsonl or trec-sgml)"
            ))),
        }
    }
}

/// An ordered set of documents with unique ids. Order is the file order
/// (or construction order) and is preserved everywhere downstream.
#[derive(Debug, Clone)]
pub struct Collection {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

/// Token counts for a collection under one tokenizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollectionStats {
    pub documents: usize,
    pub tokens: u64,
    pub distinct_terms: usize,
}

impl Collection {
    /// Build from in-memory documents, rejecting duplicate ids.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId { doc_id: d.doc_id.clone() });
            }
        }
        Ok(Collection { docs, by_id })
    }

    /// Load a collection file in the given format.
    pub fn load(path: impl AsRef<Path>, format: CollectionFormat) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match format {
            CollectionFormat::Jsonl => Self::parse_jsonl(&raw),
            CollectionFormat::TrecSgml => Self::parse_trec_sgml(&raw),
        }
    }

    pub fn parse_jsonl(raw: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Record {
            doc_id: String,
            text: String,
        }
        let mut docs = Vec::new();
        for (lineno, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line).map_err(|e| {
                Error::malformed(format!("line {}", lineno + 1), e.to_string())
            })?;
            docs.push(Document { doc_id: rec.doc_id, text: rec.text });
        }
        Self::from_documents(docs)
    }

    /// Minimal TREC SGML reader: splits on `<DOC>`...`</DOC>`, takes the
    /// `<DOCNO>` as the id and the concatenation of `<TEXT>` blocks as the
    /// body. Other children are ignored; entities are not decoded (TREC
    /// collections at this scale don't use them).
    pub fn parse_trec_sgml(raw: &str) -> Result<Self> {
        let mut docs = Vec::new();
        let mut pos = 0;
        let mut record = 0;
        while let Some(start) = raw[pos..].find("<DOC>") {
            let start = pos + start;
            record += 1;
            let body_start = start + "<DOC>".len();
            let end = raw[body_start..].find("</DOC>").ok_or(Error::UnclosedTag {
                tag: "DOC".into(),
                offset: start,
            })?;
            let body = &raw[body_start..body_start + end];
            let doc_id = tag_content(body, "DOCNO")
                .ok_or_else(|| {
                    Error::malformed(format!("record {record}"), "missing <DOCNO>")
                })?
                .trim()
                .to_string();
            if doc_id.is_empty() {
                return Err(Error::malformed(format!("record {record}"), "empty <DOCNO>"));
            }
            let mut text = String::new();
            let mut scan = body;
            while let Some(chunk) = tag_content(scan, "TEXT") {
                if !text.is_empty() {
                    text.push('\n');
                }
                text.push_str(chunk.trim_matches('\n'));
                let after = scan.find("</TEXT>").expect("chunk found above") + "</TEXT>".len();
                scan = &scan[after..];
            }
            docs.push(Document { doc_id, text });
            pos = body_start + end + "</DOC>".len();
        }
        Self::from_documents(docs)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, ordinal: usize) -> &Document {
        &self.docs[ordinal]
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).copied()
    }

    /// Count tokens and distinct terms over the whole collection with the
    /// given tokenizer.
    pub fn stats(&self, config: &TokenizerConfig) -> CollectionStats {
        let mut tokens = 0u64;
        let mut terms = HashSet::new();
        for d in &self.docs {
            for t in tokenize(&d.text, config) {
                tokens += 1;
                terms.insert(t);
            }
        }
        CollectionStats { documents: self.docs.len(), tokens, distinct_terms: terms.len() }
    }

    /// Serialize back out as JSON Lines.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for d in &self.docs {
            out.push_str(&serde_json::to_string(d).expect("document serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Extract the content of the first `<TAG>...</TAG>` pair, if present.
fn tag_content<'a>(body: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let s = body.find(&open)? + open.len();
    let e = body[s..].find(&close)?;
    Some(&body[s..s + e])
}

/// How text becomes tokens: the segmentation rule is fixed (UAX #29),
/// lowercasing and the stoplist are configurable.
#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stopwords: HashSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            stopwords: parse_stoplist(BUNDLED_STOPLIST),
        }
    }
}

impl TokenizerConfig {
    /// Default segmentation and casing but an empty stoplist, so
    /// content-word extraction is the identity.
    pub fn without_stopwords() -> Self {
        TokenizerConfig { lowercase: true, stopwords: HashSet::new() }
    }

    /// Replace the stoplist with one loaded from `path` (one token per
    /// line, `#` comments).
    pub fn with_stopword_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = parse_stoplist(&raw);
        Ok(self)
    }
}

/// Parse a stoplist: one token per line, `#` to end of line is comment,
/// blanks skipped. Entries are lowercased; matching is case-insensitive.
pub fn parse_stoplist(raw: &str) -> HashSet<String> {
    raw.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// Split `text` into normalized tokens: UAX #29 word-like segments,
/// lowercased when the config says so. Punctuation-only segments never
/// appear; every token is non-empty and whitespace-free.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.unicode_words()
        .map(|w| {
            if config.lowercase {
                w.to_lowercase()
            } else {
                w.to_string()
            }
        })
        .collect()
}

/// Drop stopwords from a token stream, preserving order and duplicates.
/// Matching is against the lowercased token, so a case-preserving
/// tokenizer still filters `The`.
pub fn extract_content_words(tokens: &[String], config: &TokenizerConfig) -> Vec<String> {
    if config.stopwords.is_empty() {
        return tokens.to_vec();
    }
    tokens
        .iter()
        .filter(|t| {
            let lower = t.to_lowercase();
            !config.stopwords.contains(&lower)
        })
        .cloned()
        .collect()
}

/// Split raw text into sentence chunks on terminal punctuation
/// (`.`, `!`, `?`, `。`). A document with none of these comes back whole.
/// Used by the language-model side; retrieval tokenizes whole documents.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        if matches!(ch, '.' | '!' | '?' | '。') {
            let piece = &text[start..i];
            if !piece.trim().is_empty() {
                out.push(piece);
            }
            start = i + ch.len_utf8();
        }
    }
    let tail = &text[start..];
    if !tail.trim().is_empty() {
        out.push(tail);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_drops_punctuation() {
        let cfg = TokenizerConfig::default();
        assert_eq!(tokenize("Harbor Dredging", &cfg), vec!["harbor", "dredging"]);
        assert_eq!(
            tokenize("load-balancing scheme.", &cfg),
            vec!["load", "balancing", "scheme"]
        );
        assert_eq!(tokenize("", &cfg), Vec::<String>::new());
        assert_eq!(tokenize("?!* --- ...", &cfg), Vec::<String>::new());
    }

    #[test]
    fn tokenize_respects_case_flag() {
        let cfg = TokenizerConfig { lowercase: false, ..TokenizerConfig::default() };
        assert_eq!(tokenize("Harbor dredging", &cfg), vec!["Harbor", "dredging"]);
    }

    #[test]
    fn content_words_drop_bundled_stopwords() {
        let cfg = TokenizerConfig::default();
        let toks = tokenize("are there any reports about the wetlands", &cfg);
        assert_eq!(extract_content_words(&toks, &cfg), vec!["reports", "wetlands"]);
    }

    #[test]
    fn content_words_identity_with_empty_stoplist() {
        let cfg = TokenizerConfig::without_stopwords();
        let toks = tokenize("are there any reports", &cfg);
        assert_eq!(extract_content_words(&toks, &cfg), toks);
    }

    #[test]
    fn content_words_of_empty_stream() {
        let cfg = TokenizerConfig::default();
        assert_eq!(extract_content_words(&[], &cfg), Vec::<String>::new());
    }

    #[test]
    fn stoplist_parser_handles_comments_and_blanks() {
        let set = parse_stoplist("# header\nthe\n\n  and # trailing\nOf\n");
        assert_eq!(set.len(), 3);
        assert!(set.contains("the") && set.contains("and") && set.contains("of"));
    }

    #[test]
    fn jsonl_roundtrip_and_duplicate_detection() {
        let ok = Collection::parse_jsonl(
            "{\"doc_id\":\"d1\",\"text\":\"alpha\"}\n{\"doc_id\":\"d2\",\"text\":\"beta\"}\n",
        )
        .unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.get(1).doc_id, "d2");
        assert_eq!(ok.ordinal("d1"), Some(0));

        let dup = Collection::parse_jsonl(
            "{\"doc_id\":\"d1\",\"text\":\"a\"}\n{\"doc_id\":\"d1\",\"text\":\"b\"}\n",
        );
        assert!(matches!(dup, Err(Error::DuplicateDocId { .. })));
    }

    #[test]
    fn jsonl_reports_bad_line_number() {
        let err = Collection::parse_jsonl("{\"doc_id\":\"d1\",\"text\":\"a\"}\nnot json\n")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "unexpected message: {msg}");
    }

    #[test]
    fn trec_sgml_basic_record() {
        let raw = "\
<DOC>
<DOCNO> X-101 </DOCNO>
<TITLE>ignored</TITLE>
<TEXT>
First block.
</TEXT>
<TEXT>Second block.</TEXT>
</DOC>
<DOC>
<DOCNO>X-102</DOCNO>
<TEXT>Short.</TEXT>
</DOC>
";
        let c = Collection::parse_trec_sgml(raw).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(0).doc_id, "X-101");
        assert_eq!(c.get(0).text, "First block.\nSecond block.");
        assert_eq!(c.get(1).doc_id, "X-102");
    }

    #[test]
    fn trec_sgml_missing_docno_is_rejected() {
        let err = Collection::parse_trec_sgml("<DOC><TEXT>x</TEXT></DOC>").unwrap_err();
        assert!(err.to_string().contains("record 1"));
    }

    #[test]
    fn trec_sgml_unclosed_doc_is_rejected() {
        let err = Collection::parse_trec_sgml("<DOC><DOCNO>a</DOCNO>").unwrap_err();
        assert!(matches!(err, Error::UnclosedTag { .. }));
    }

    #[test]
    fn sentence_segmentation() {
        assert_eq!(
            segment_sentences("First one. Second! Third? 四つ目。tail"),
            vec!["First one", " Second", " Third", " 四つ目", "tail"]
        );
        assert_eq!(segment_sentences("no terminal punctuation"), vec!["no terminal punctuation"]);
        assert_eq!(segment_sentences(""), Vec::<&str>::new());
        assert_eq!(segment_sentences("..."), Vec::<&str>::new());
    }

    #[test]
    fn stats_sum_over_documents() {
        let c = Collection::from_documents(vec![
            Document { doc_id: "a".into(), text: "one two three".into() },
            Document { doc_id: "b".into(), text: "four five".into() },
            Document { doc_id: "c".into(), text: "".into() },
        ])
        .unwrap();
        let s = c.stats(&TokenizerConfig::default());
        assert_eq!(s.documents, 3);
        assert_eq!(s.tokens, 5);
        assert_eq!(s.distinct_terms, 5);
    }
}
