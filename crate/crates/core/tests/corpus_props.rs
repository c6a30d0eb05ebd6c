//! Tokenizer and collection-format behavior: a frozen 50-string fixture
//! pinning Unicode word segmentation, plus structural properties on
//! randomized corpora.

mod common;

use common::*;
use voxir::corpus::{
    extract_content_words, segment_sentences, tokenize, Collection, CollectionFormat, Document,
    TokenizerConfig,
};

fn no_stop() -> TokenizerConfig {
    TokenizerConfig::without_stopwords()
}

/// Frozen expectations for the tokenizer (lowercasing on, no stoplist).
/// Each entry was verified against the Unicode UAX #29 default word
/// boundary rules; the fixture exists to catch regressions, including a
/// surprise change of segmenter behavior.
const FROZEN: &[(&str, &[&str])] = &[
    // Plain words and whitespace.
    ("hello world", &["hello", "world"]),
    ("  leading and   trailing   ", &["leading", "and", "trailing"]),
    ("one", &["one"]),
    ("", &[]),
    ("   ", &[]),
    ("\t\nmixed\rwhitespace\n", &["mixed", "whitespace"]),
    // Case folding.
    ("MiXeD CaSe", &["mixed", "case"]),
    ("SHOUTING", &["shouting"]),
    ("İstanbul", &["i̇stanbul"]), // dotted capital I lowercases with combining dot
    // Punctuation is dropped when standalone.
    ("end.", &["end"]),
    ("really?!", &["really"]),
    ("wait... what", &["wait", "what"]),
    ("(parenthetical)", &["parenthetical"]),
    ("\"quoted\"", &["quoted"]),
    ("semi;colon", &["semi", "colon"]),
    ("a,b", &["a", "b"]),
    // Hyphens split words.
    ("load-balancing", &["load", "balancing"]),
    ("co-op", &["co", "op"]),
    ("pre-1990s", &["pre", "1990s"]),
    ("state-of-the-art", &["state", "of", "the", "art"]),
    // Apostrophes join letters but are trimmed at the edges.
    ("doesn't", &["doesn't"]),
    ("o'clock", &["o'clock"]),
    ("rock'n'roll", &["rock'n'roll"]),
    ("dogs'", &["dogs"]),
    ("'quoted'", &["quoted"]),
    ("don’t", &["don’t"]), // curly apostrophe joins too
    ("tie-in's", &["tie", "in's"]),
    // Digits and number-like shapes.
    ("42", &["42"]),
    ("3.5", &["3.5"]),
    ("1,000", &["1,000"]),
    ("x2y", &["x2y"]),
    ("route 66 east", &["route", "66", "east"]),
    ("½", &["½"]),
    ("£4", &["4"]),
    ("№5", &["5"]),
    // Connector punctuation joins; symbols are dropped.
    ("snake_case", &["snake_case"]),
    ("C++", &["c"]),
    ("a@b.com", &["a", "b.com"]),
    ("e.g.", &["e.g"]),
    ("U.S.A.", &["u.s.a"]),
    // Non-Latin scripts.
    ("можно идти", &["можно", "идти"]),
    ("çok güzel", &["çok", "güzel"]),
    ("naïve café", &["naïve", "café"]),
    ("ελληνικά", &["ελληνικά"]),
    ("日本語", &["日", "本", "語"]), // ideographs segment per character
    ("ひらがな", &["ひ", "ら", "が", "な"]),
    ("カタカナ", &["カタカナ"]), // katakana runs stay together
    ("mixed 日本 text", &["mixed", "日", "本", "text"]),
    // Realistic sentences.
    (
        "The quick-thinking operator re-ran the job.",
        &["the", "quick", "thinking", "operator", "re", "ran", "the", "job"],
    ),
    (
        "Retrieval isn't free: queries cost 3.5 ms each!",
        &["retrieval", "isn't", "free", "queries", "cost", "3.5", "ms", "each"],
    ),
];

#[test]
fn tokenizer_matches_the_frozen_fixture() {
    assert!(FROZEN.len() >= 50, "fixture must stay at 50+ strings, has {}", FROZEN.len());
    let cfg = no_stop();
    for (input, expected) in FROZEN {
        let got = tokenize(input, &cfg);
        let want: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        assert_eq!(got, want, "input {input:?}");
    }
}

#[test]
fn tokenization_is_stable_under_rejoining() {
    // Tokens are pure lowercase word shapes; joining them with spaces and
    // re-tokenizing must give the same list back.
    let mut r = rng(0xC0_0001);
    for _ in 0..200 {
        let tokens = random_tokens(&mut r, 40, 30);
        let text = tokens.join(" ");
        assert_eq!(tokenize(&text, &no_stop()), tokens);
    }
    for (input, _) in FROZEN {
        let cfg = no_stop();
        let once = tokenize(input, &cfg);
        let twice = tokenize(&once.join(" "), &cfg);
        assert_eq!(twice, once, "re-tokenizing {input:?} must be stable");
    }
}

#[test]
fn case_preservation_when_lowercasing_is_off() {
    let mut cfg = no_stop();
    cfg.lowercase = false;
    assert_eq!(tokenize("MiXeD CaSe", &cfg), vec!["MiXeD", "CaSe"]);
    cfg.lowercase = true;
    assert_eq!(tokenize("MiXeD CaSe", &cfg), vec!["mixed", "case"]);
}

#[test]
fn content_word_extraction_respects_the_stoplist() {
    let cfg = TokenizerConfig::default();
    let tokens = tokenize("are there any wetlands near the harbor", &cfg);
    assert_eq!(extract_content_words(&tokens, &cfg), vec!["wetlands", "near", "harbor"]);
    // Without a stoplist the extraction is the identity.
    let empty = no_stop();
    assert_eq!(extract_content_words(&tokens, &empty), tokens);
}

#[test]
fn collection_stats_match_hand_counts() {
    let mut r = rng(0xC0_0002);
    for _ in 0..10 {
        let raw = random_corpus(&mut r, 60, 30);
        let collection = Collection::from_documents(
            raw.iter()
                .map(|(id, toks)| Document { doc_id: id.clone(), text: toks.join(" ") })
                .collect(),
        )
        .unwrap();
        let stats = collection.stats(&no_stop());
        let token_total: usize = raw.iter().map(|(_, t)| t.len()).sum();
        let mut types: Vec<&String> = raw.iter().flat_map(|(_, t)| t).collect();
        types.sort();
        types.dedup();
        assert_eq!(stats.documents, raw.len());
        assert_eq!(stats.tokens as usize, token_total);
        assert_eq!(stats.distinct_terms, types.len());
    }
}

#[test]
fn jsonl_round_trip_preserves_documents() {
    let mut r = rng(0xC0_0003);
    let raw = random_corpus(&mut r, 30, 20);
    let collection = Collection::from_documents(
        raw.iter()
            .map(|(id, toks)| Document { doc_id: id.clone(), text: toks.join(" ") })
            .collect(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docs.jsonl");
    collection.write_jsonl(&path).unwrap();
    let back = Collection::load(&path, CollectionFormat::Jsonl).unwrap();
    assert_eq!(back.docs(), collection.docs());
}

#[test]
fn trec_sgml_parses_generated_records() {
    let mut r = rng(0xC0_0004);
    let raw = random_corpus(&mut r, 20, 15);
    let mut sgml = String::new();
    for (id, tokens) in &raw {
        sgml.push_str("<DOC>\n<DOCNO> ");
        sgml.push_str(id);
        sgml.push_str(" </DOCNO>\n<TEXT>\n");
        sgml.push_str(&tokens.join(" "));
        sgml.push_str("\n</TEXT>\n</DOC>\n");
    }
    let collection = Collection::parse_trec_sgml(&sgml).unwrap();
    assert_eq!(collection.len(), raw.len());
    for (i, (id, tokens)) in raw.iter().enumerate() {
        assert_eq!(collection.get(i).doc_id, *id);
        assert_eq!(tokenize(&collection.get(i).text, &no_stop()), *tokens);
    }
}

#[test]
fn sentence_segmentation_covers_all_text_content() {
    let text = "First part. Second part! Third? 最後です。 tail without stop";
    let sentences = segment_sentences(text);
    assert_eq!(sentences.len(), 5);
    // No sentence is blank, and every word lands in exactly one sentence.
    let cfg = no_stop();
    let from_sentences: Vec<String> =
        sentences.iter().flat_map(|s| tokenize(s, &cfg)).collect();
    assert_eq!(from_sentences, tokenize(text, &cfg));
    // Text with no terminators comes back whole.
    assert_eq!(segment_sentences("no stops here"), vec!["no stops here"]);
    assert!(segment_sentences("").is_empty());
}
