//! Synthetic two-domain corpus generator.
//!
//! Builds a pair of document collections ("a" and "b") with Zipfian word
//! frequencies, plus topics and relevance judgments derived from known
//! document-topic assignments, so the whole retrieval-under-noise loop
//! can run without any external data.
//!
//! The construction that makes cross-domain effects observable:
//!
//! * the two domains share a small set of real English function words
//!   (all on the bundled stoplist), but their content vocabularies are
//!   disjoint by construction — a language model trained on domain "a"
//!   has never seen a single domain-"b" content word, and vice versa;
//! * each topic owns a dedicated block of content words that only its
//!   documents use, so a topic's query retrieves exactly its documents
//!   when undamaged;
//! * every document belongs to one topic (round-robin), and the qrels
//!   mark precisely those documents relevant.
//!
//! Topic files are written in the ntcir-style dialect for domain "a" and
//! the irex-style dialect for domain "b", exercising both parsers and
//! both query-field conventions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asrsim::derive_seed;
use crate::corpus::{Collection, Document};
use crate::error::{Error, Result};
use crate::eval::{Qrels, Topic, TopicDialect};

/// Function words shared by both domains. Every entry is on the bundled
/// stoplist, so content-word extraction strips them from queries and
/// documents alike.
const FUNCTION_WORDS: [&str; 16] = [
    "the", "of", "and", "to", "in", "is", "on", "for", "with", "as", "at", "by", "are", "there",
    "any", "about",
];

/// Number of dedicated words each topic owns.
const TOPIC_WORDS: usize = 10;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub docs_per_domain: usize,
    pub topics_per_domain: usize,
    /// Domain-wide background vocabulary size (on top of topic words).
    pub background_words: usize,
    pub sentences_per_doc: usize,
    pub words_per_sentence: usize,
    /// Zipf exponent for background and function word draws.
    pub zipf_exponent: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 4,
            docs_per_domain: 600,
            topics_per_domain: 24,
            background_words: 200,
            sentences_per_doc: 5,
            words_per_sentence: 12,
            zipf_exponent: 1.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.topics_per_domain == 0 || self.docs_per_domain < self.topics_per_domain {
            return Err(Error::InvalidParam(
                "need at least one topic and docs_per_domain >= topics_per_domain".into(),
            ));
        }
        if self.background_words == 0 || self.sentences_per_doc == 0 || self.words_per_sentence == 0
        {
            return Err(Error::InvalidParam(
                "background_words, sentences_per_doc, words_per_sentence must be >= 1".into(),
            ));
        }
        if !(self.zipf_exponent > 0.0) {
            return Err(Error::InvalidParam("zipf_exponent must be > 0".into()));
        }
        // Sentence openers cycle through the topic's dedicated words, so a
        // topic with at least ceil(TOPIC_WORDS / sentences_per_doc)
        // documents is guaranteed to surface all of them. Every topic has
        // at least docs_per_domain / topics_per_domain documents.
        if (self.docs_per_domain / self.topics_per_domain) * self.sentences_per_doc < TOPIC_WORDS {
            return Err(Error::InvalidParam(
                "too few sentences per topic to surface every dedicated topic word; \
                 raise docs_per_domain or sentences_per_doc"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// One generated domain: its documents, topics, judgments, and the topic
/// dialect its file form uses.
#[derive(Debug, Clone)]
pub struct SynthDomain {
    pub name: &'static str,
    pub dialect: TopicDialect,
    pub collection: Collection,
    pub topics: Vec<Topic>,
    pub qrels: Qrels,
}

#[derive(Debug, Clone)]
pub struct SynthPair {
    pub a: SynthDomain,
    pub b: SynthDomain,
}

/// Cumulative table for Zipf-distributed index draws: weight of rank i
/// is 1/(i+1)^s.
struct ZipfTable {
    cum: Vec<f64>,
}

impl ZipfTable {
    fn new(n: usize, s: f64) -> Self {
        let mut cum = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            total += 1.0 / ((i + 1) as f64).powf(s);
            cum.push(total);
        }
        ZipfTable { cum }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cum.last().expect("non-empty table");
        let u = next_f64(rng) * total;
        self.cum.partition_point(|&c| c <= u).min(self.cum.len() - 1)
    }
}

fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Generate both domains. Deterministic in the config.
pub fn generate(config: &SynthConfig) -> Result<SynthPair> {
    config.validate()?;
    let a = generate_domain(config, "a", "ax", TopicDialect::Ntcir, derive_seed(config.seed, 0xA))?;
    let b = generate_domain(config, "b", "bx", TopicDialect::Irex, derive_seed(config.seed, 0xB))?;
    Ok(SynthPair { a, b })
}

fn generate_domain(
    config: &SynthConfig,
    name: &'static str,
    prefix: &str,
    dialect: TopicDialect,
    seed: u64,
) -> Result<SynthDomain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_count = config.topics_per_domain;

    // Vocabulary: per-topic dedicated words plus a shared background pool,
    // all carrying the domain prefix so the two domains stay disjoint.
    let topic_words: Vec<Vec<String>> = (0..t_count)
        .map(|t| {
            (0..TOPIC_WORDS)
                .map(|j| format!("{prefix}t{t:02}w{j}"))
                .collect()
        })
        .collect();
    let background: Vec<String> = (0..config.background_words)
        .map(|i| format!("{prefix}bg{i:03}"))
        .collect();

    let func_zipf = ZipfTable::new(FUNCTION_WORDS.len(), config.zipf_exponent);
    let bg_zipf = ZipfTable::new(background.len(), config.zipf_exponent);

    // Documents: doc i belongs to topic i % t_count and salts its
    // sentences with that topic's dedicated words. Each sentence opens
    // with a deterministic rotation through those words, so across a
    // topic's documents every dedicated word is guaranteed to occur;
    // the remaining positions are random draws.
    let mut docs = Vec::with_capacity(config.docs_per_domain);
    for i in 0..config.docs_per_domain {
        let topic = i % t_count;
        let within_topic = i / t_count;
        let mut text = String::new();
        for s in 0..config.sentences_per_doc {
            if s > 0 {
                text.push(' ');
            }
            let opener = (within_topic * config.sentences_per_doc + s) % TOPIC_WORDS;
            text.push_str(&topic_words[topic][opener]);
            for _ in 1..config.words_per_sentence {
                text.push(' ');
                let u = next_f64(&mut rng);
                if u < 0.35 {
                    text.push_str(FUNCTION_WORDS[func_zipf.sample(&mut rng)]);
                } else if u < 0.75 {
                    let j = (rng.next_u64() % TOPIC_WORDS as u64) as usize;
                    text.push_str(&topic_words[topic][j]);
                } else {
                    text.push_str(&background[bg_zipf.sample(&mut rng)]);
                }
            }
            text.push('.');
        }
        docs.push(Document { doc_id: format!("{prefix}d{i:04}"), text });
    }
    let collection = Collection::from_documents(docs)?;

    // Topics: ids styled after each dialect's convention. The dictated
    // field (description for ntcir, narrative for irex) uses only
    // function words and the topic's own dedicated words, so an
    // in-domain channel model knows every query token.
    let mut topics = Vec::with_capacity(t_count);
    let mut judgments: Vec<(String, String, bool)> = Vec::new();
    for t in 0..t_count {
        let topic_id = match dialect {
            TopicDialect::Ntcir => format!("{:04}", 101 + t),
            TopicDialect::Irex => format!("{}", 1001 + t),
        };
        let w = &topic_words[t];
        let description = format!(
            "are there any {} {} about the {} and the {} in {}.",
            w[0], w[1], w[2], w[3], w[4]
        );
        let narrative = format!(
            "there are {} and {} with the {} on the {}. the {} is at the {} for the {} and the {}.",
            w[0], w[1], w[2], w[3], w[4], w[5], w[6], w[7]
        );
        topics.push(Topic {
            topic_id: topic_id.clone(),
            title: Some(w[0].clone()),
            description: Some(description),
            narrative: Some(narrative),
        });
        for i in 0..config.docs_per_domain {
            if i % t_count == t {
                judgments.push((topic_id.clone(), format!("{prefix}d{i:04}"), true));
            }
        }
        // A few judged-nonrelevant documents from the next topic over,
        // so the qrels exercise binarization.
        let other = (t + 1) % t_count;
        for (n, i) in (0..config.docs_per_domain).filter(|i| i % t_count == other).enumerate() {
            if n >= 3 {
                break;
            }
            judgments.push((topic_id.clone(), format!("{prefix}d{i:04}"), false));
        }
    }
    let qrels = Qrels::from_judgments(judgments);

    Ok(SynthDomain { name, dialect, collection, topics, qrels })
}

/// Paths written by [`write_to_dir`].
#[derive(Debug, Clone, Serialize)]
pub struct SynthPaths {
    pub docs_a: PathBuf,
    pub docs_b: PathBuf,
    pub topics_a: PathBuf,
    pub topics_b: PathBuf,
    pub qrels_a: PathBuf,
    pub qrels_b: PathBuf,
}

/// Render one domain's topics in its file dialect.
pub fn topics_to_sgml(topics: &[Topic], dialect: TopicDialect) -> String {
    let mut out = String::new();
    for t in topics {
        match dialect {
            TopicDialect::Ntcir => {
                writeln!(out, "<TOPIC q={}>", t.topic_id).unwrap();
            }
            TopicDialect::Irex => {
                out.push_str("<TOPIC>\n");
                writeln!(out, "<TOPIC-ID>{}</TOPIC-ID>", t.topic_id).unwrap();
            }
        }
        if let Some(title) = &t.title {
            writeln!(out, "<TITLE>{title}</TITLE>").unwrap();
        }
        if let Some(d) = &t.description {
            writeln!(out, "<DESCRIPTION>{d}</DESCRIPTION>").unwrap();
        }
        if let Some(n) = &t.narrative {
            writeln!(out, "<NARRATIVE>{n}</NARRATIVE>").unwrap();
        }
        out.push_str("</TOPIC>\n");
    }
    out
}

/// Write a generated pair into `dir` (created if missing): JSONL
/// documents, SGML topics, qrels, and a small manifest echoing the
/// config.
pub fn write_to_dir(pair: &SynthPair, config: &SynthConfig, dir: impl AsRef<Path>) -> Result<SynthPaths> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = SynthPaths {
        docs_a: dir.join("docs_a.jsonl"),
        docs_b: dir.join("docs_b.jsonl"),
        topics_a: dir.join("topics_a.sgml"),
        topics_b: dir.join("topics_b.sgml"),
        qrels_a: dir.join("qrels_a.txt"),
        qrels_b: dir.join("qrels_b.txt"),
    };
    pair.a.collection.write_jsonl(&paths.docs_a)?;
    pair.b.collection.write_jsonl(&paths.docs_b)?;
    let write = |path: &Path, content: String| -> Result<()> {
        fs::write(path, content).map_err(|e| Error::io(path, e))
    };
    write(&paths.topics_a, topics_to_sgml(&pair.a.topics, pair.a.dialect))?;
    write(&paths.topics_b, topics_to_sgml(&pair.b.topics, pair.b.dialect))?;
    write(&paths.qrels_a, pair.a.qrels.to_text())?;
    write(&paths.qrels_b, pair.b.qrels.to_text())?;
    #[derive(Serialize)]
    struct Manifest<'c> {
        config: &'c SynthConfig,
        files: &'c SynthPaths,
    }
    let manifest = serde_json::to_string_pretty(&Manifest { config, files: &paths })
        .expect("manifest serializes");
    write(&dir.join("manifest.json"), manifest + "\n")?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, TokenizerConfig};
    use std::collections::BTreeSet;

    fn small() -> SynthConfig {
        SynthConfig {
            seed: 11,
            docs_per_domain: 40,
            topics_per_domain: 8,
            background_words: 30,
            sentences_per_doc: 3,
            words_per_sentence: 8,
            zipf_exponent: 1.0,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p1 = generate(&small()).unwrap();
        let p2 = generate(&small()).unwrap();
        for (d1, d2) in [(&p1.a, &p2.a), (&p1.b, &p2.b)] {
            assert_eq!(d1.collection.docs(), d2.collection.docs());
            assert_eq!(d1.topics, d2.topics);
            assert_eq!(d1.qrels, d2.qrels);
        }
        let p3 = generate(&SynthConfig { seed: 12, ..small() }).unwrap();
        assert_ne!(p1.a.collection.docs(), p3.a.collection.docs());
    }

    #[test]
    fn content_vocabularies_are_disjoint() {
        let pair = generate(&small()).unwrap();
        let cfg = TokenizerConfig::default();
        let vocab = |d: &SynthDomain| -> BTreeSet<String> {
            d.collection
                .docs()
                .iter()
                .flat_map(|doc| tokenize(&doc.text, &cfg))
                .filter(|t| !cfg.stopwords.contains(t))
                .collect()
        };
        let va = vocab(&pair.a);
        let vb = vocab(&pair.b);
        assert!(!va.is_empty() && !vb.is_empty());
        assert!(va.is_disjoint(&vb), "content words must not leak across domains");
    }

    #[test]
    fn every_topic_has_relevant_docs_and_in_corpus_query_words() {
        let pair = generate(&small()).unwrap();
        let cfg = TokenizerConfig::default();
        for domain in [&pair.a, &pair.b] {
            let corpus_vocab: BTreeSet<String> = domain
                .collection
                .docs()
                .iter()
                .flat_map(|doc| tokenize(&doc.text, &cfg))
                .collect();
            for t in &domain.topics {
                assert!(domain.qrels.relevant_count(&t.topic_id) > 0, "topic {}", t.topic_id);
                let q = crate::eval::select_query_field(t, domain.dialect).unwrap();
                for tok in tokenize(q, &cfg) {
                    assert!(
                        corpus_vocab.contains(&tok),
                        "query token {tok:?} of topic {} missing from its own domain",
                        t.topic_id
                    );
                }
            }
        }
    }

    #[test]
    fn topic_files_roundtrip_through_the_parsers() {
        let pair = generate(&small()).unwrap();
        let sgml = topics_to_sgml(&pair.a.topics, pair.a.dialect);
        let parsed = crate::eval::parse_topics(&sgml, TopicDialect::Ntcir).unwrap();
        assert_eq!(parsed, pair.a.topics);
        let sgml = topics_to_sgml(&pair.b.topics, pair.b.dialect);
        let parsed = crate::eval::parse_topics(&sgml, TopicDialect::Irex).unwrap();
        assert_eq!(parsed, pair.b.topics);
    }

    #[test]
    fn written_files_load_back(){
        let dir = tempfile::tempdir().unwrap();
        let config = small();
        let pair = generate(&config).unwrap();
        let paths = write_to_dir(&pair, &config, dir.path()).unwrap();
        let a = Collection::load(&paths.docs_a, crate::corpus::CollectionFormat::Jsonl).unwrap();
        assert_eq!(a.docs(), pair.a.collection.docs());
        let qrels = Qrels::load(&paths.qrels_a, 1).unwrap();
        assert_eq!(qrels, pair.a.qrels);
        let topics = crate::eval::load_topics(&paths.topics_a, TopicDialect::Ntcir).unwrap();
        assert_eq!(topics, pair.a.topics);
    }

    #[test]
    fn config_validation() {
        assert!(generate(&SynthConfig { topics_per_domain: 0, ..small() }).is_err());
        assert!(generate(&SynthConfig { docs_per_domain: 3, topics_per_domain: 8, ..small() }).is_err());
        assert!(generate(&SynthConfig { zipf_exponent: 0.0, ..small() }).is_err());
    }
}
