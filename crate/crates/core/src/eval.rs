//! Topics, relevance judgments, and rank-based evaluation.
//!
//! Topic files are SGML in one of two dialects. The `ntcir`-style dialect
//! marks the id as an attribute of the opening tag (`<TOPIC q=0123>`) and
//! carries `<TITLE>`, `<DESCRIPTION>`, `<NARRATIVE>` children; its query
//! field is the description. The `irex`-style dialect holds the id in a
//! `<TOPIC-ID>` child element and uses the narrative as the query field.
//!
//! Evaluation follows the TREC conventions: non-interpolated average
//! precision with the number of relevant documents taken from the qrels,
//! and interpolated precision at the eleven recall points 0.0, 0.1, ...
//! 1.0 where interpolated precision at recall level r is the maximum
//! precision at any achieved recall >= r.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::ScoredDoc;
use crate::scalar::Real;

/// Number of sample points on the interpolated recall-precision curve.
pub const CURVE_POINTS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicDialect {
    /// Attribute-style id, query text in `<DESCRIPTION>`.
    Ntcir,
    /// Element-style `<TOPIC-ID>`, query text in `<NARRATIVE>`.
    Irex,
}

impl TopicDialect {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ntcir" => Ok(TopicDialect::Ntcir),
            "irex" => Ok(TopicDialect::Irex),
            other => Err(Error::InvalidParam(format!(
                "unknown topic dialect {other:?} (expected ntcir or irex)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TopicDialect::Ntcir => "ntcir",
            TopicDialect::Irex => "irex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    pub title: Option<String>,
    pub description: Option<String>,
    pub narrative: Option<String>,
}

/// Parse a topic file in the given dialect. Topics come back in file
/// order; an empty file gives an empty list. Field text is
/// whitespace-normalized (internal runs collapsed to single spaces).
pub fn parse_topics(raw: &str, dialect: TopicDialect) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut pos = 0;
    while let Some(found) = raw[pos..].find("<TOPIC") {
        let open_start = pos + found;
        // "<TOPIC" must be the whole tag name: next char is '>' or
        // whitespace (attribute form). "<TOPIC-ID>" inside a block is
        // skipped here because we jump over whole blocks below.
        let after = open_start + "<TOPIC".len();
        let rest = &raw[after..];
        let Some(gt) = rest.find('>') else {
            return Err(Error::UnclosedTag { tag: "TOPIC".into(), offset: open_start });
        };
        let attrs = &rest[..gt];
        if !attrs.is_empty() && !attrs.starts_with(char::is_whitespace) {
            // Something like <TOPICS> — not a topic block.
            pos = after;
            continue;
        }
        let body_start = after + gt + 1;
        let Some(end) = raw[body_start..].find("</TOPIC>") else {
            return Err(Error::UnclosedTag { tag: "TOPIC".into(), offset: open_start });
        };
        let body = &raw[body_start..body_start + end];

        let topic_id = match dialect {
            TopicDialect::Ntcir => attr_value(attrs, "q"),
            TopicDialect::Irex => field(body, "TOPIC-ID"),
        }
        .ok_or(Error::MissingTopicId { offset: open_start })?;
        if topic_id.is_empty() {
            return Err(Error::MissingTopicId { offset: open_start });
        }
        if !seen.insert(topic_id.clone()) {
            return Err(Error::DuplicateTopicId { topic_id });
        }
        topics.push(Topic {
            topic_id,
            title: field(body, "TITLE"),
            description: field(body, "DESCRIPTION"),
            narrative: field(body, "NARRATIVE"),
        });
        pos = body_start + end + "</TOPIC>".len();
    }
    Ok(topics)
}

/// Load and parse a topic file.
pub fn load_topics(path: impl AsRef<Path>, dialect: TopicDialect) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_topics(&raw, dialect)
}

/// The text a speaker would dictate for this topic: the description for
/// the ntcir dialect, the narrative for irex. Missing or empty field is
/// an error naming the topic.
pub fn select_query_field<'t>(topic: &'t Topic, dialect: TopicDialect) -> Result<&'t str> {
    let (text, name) = match dialect {
        TopicDialect::Ntcir => (&topic.description, "DESCRIPTION"),
        TopicDialect::Irex => (&topic.narrative, "NARRATIVE"),
    };
    match text.as_deref() {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(Error::EmptyQueryField { topic_id: topic.topic_id.clone(), field: name }),
    }
}

/// First `<TAG>...</TAG>` content in `body`, whitespace-normalized.
fn field(body: &str, tag: &str) -> Option<String> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let s = body.find(&open)? + open.len();
    let e = body[s..].find(&close)?;
    let text = body[s..s + e].split_whitespace().collect::<Vec<_>>().join(" ");
    Some(text)
}

/// Value of `name=value` inside an opening tag's attribute text. Values
/// may be bare or quoted.
fn attr_value(attrs: &str, name: &str) -> Option<String> {
    for piece in attrs.split_whitespace() {
        if let Some(v) = piece.strip_prefix(name) {
            if let Some(v) = v.strip_prefix('=') {
                return Some(v.trim_matches('"').trim_matches('\'').to_string());
            }
        }
    }
    None
}

/// Relevance judgments: topic -> doc -> relevant?
///
/// Built from TREC qrels lines `topic_id 0 doc_id relevance`; a judgment
/// is relevant when its integer grade is at or above the binarization
/// threshold (1 by default).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    topics: BTreeMap<String, BTreeMap<String, bool>>,
}

impl Qrels {
    pub fn parse(raw: &str, threshold: i32) -> Result<Self> {
        let mut topics: BTreeMap<String, BTreeMap<String, bool>> = BTreeMap::new();
        for (lineno, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::malformed(
                    format!("qrels line {}", lineno + 1),
                    "expected: topic_id 0 doc_id relevance",
                ));
            }
            let grade: i32 = f[3].parse().map_err(|_| {
                Error::malformed(format!("qrels line {}", lineno + 1), "bad relevance grade")
            })?;
            let relevant = grade >= threshold;
            let prev = topics
                .entry(f[0].to_string())
                .or_default()
                .insert(f[2].to_string(), relevant);
            if let Some(prev) = prev {
                if prev != relevant {
                    return Err(Error::malformed(
                        format!("qrels line {}", lineno + 1),
                        format!("conflicting judgments for topic {} doc {}", f[0], f[2]),
                    ));
                }
            }
        }
        Ok(Qrels { topics })
    }

    pub fn load(path: impl AsRef<Path>, threshold: i32) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw, threshold)
    }

    /// Build directly from (topic, doc, relevant) triples.
    pub fn from_judgments<I>(iter: I) -> Self
    where
        I: IntoIterator<Item = (String, String, bool)>,
    {
        let mut topics: BTreeMap<String, BTreeMap<String, bool>> = BTreeMap::new();
        for (t, d, rel) in iter {
            topics.entry(t).or_default().insert(d, rel);
        }
        Qrels { topics }
    }

    pub fn has_topic(&self, topic_id: &str) -> bool {
        self.topics.contains_key(topic_id)
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(|s| s.as_str())
    }

    pub fn is_relevant(&self, topic_id: &str, doc_id: &str) -> bool {
        self.topics
            .get(topic_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(false)
    }

    /// Number of relevant documents judged for a topic.
    pub fn relevant_count(&self, topic_id: &str) -> usize {
        self.topics
            .get(topic_id)
            .map_or(0, |m| m.values().filter(|&&r| r).count())
    }

    /// Serialize back to qrels lines (grades 1/0).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, docs) in &self.topics {
            for (d, rel) in docs {
                writeln!(out, "{t} 0 {d} {}", u8::from(*rel)).unwrap();
            }
        }
        out
    }
}

/// Ranked results for a set of topics, ordered by descending score with
/// ascending doc_id on ties; no duplicate documents within a topic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedRun<R: Real = f64> {
    topics: BTreeMap<String, Vec<ScoredDoc<R>>>,
}

impl<R: Real> RankedRun<R> {
    pub fn new() -> Self {
        RankedRun { topics: BTreeMap::new() }
    }

    /// Add one topic's ranking (already sorted, as produced by search).
    /// Rejects duplicate topics and duplicate documents within the list.
    pub fn add_topic(&mut self, topic_id: &str, results: Vec<ScoredDoc<R>>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for d in &results {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::malformed(
                    format!("topic {topic_id}"),
                    format!("duplicate document {} in ranking", d.doc_id),
                ));
            }
        }
        if self.topics.insert(topic_id.to_string(), results).is_some() {
            return Err(Error::DuplicateTopicId { topic_id: topic_id.to_string() });
        }
        Ok(())
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(|s| s.as_str())
    }

    pub fn results(&self, topic_id: &str) -> Option<&[ScoredDoc<R>]> {
        self.topics.get(topic_id).map(|v| v.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Render as TREC run lines: `topic_id Q0 doc_id rank score tag`,
    /// ranks from 1. Scores print in shortest-roundtrip form, so a
    /// written run reloads to the same ranking.
    pub fn to_trec(&self, tag: &str) -> String {
        let mut out = String::new();
        for (topic, docs) in &self.topics {
            for (rank, d) in docs.iter().enumerate() {
                writeln!(out, "{topic} Q0 {} {} {} {tag}", d.doc_id, rank + 1, d.score).unwrap();
            }
        }
        out
    }

    pub fn save_trec(&self, path: impl AsRef<Path>, tag: &str) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_trec(tag)).map_err(|e| Error::io(path, e))
    }

    /// Parse TREC run lines. Documents are re-ranked by descending score
    /// (doc_id ascending on ties), the same order the writer uses, so a
    /// run survives a write/read cycle unchanged.
    pub fn parse_trec(raw: &str) -> Result<Self> {
        let mut topics: BTreeMap<String, Vec<ScoredDoc<R>>> = BTreeMap::new();
        for (lineno, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::malformed(
                    format!("run line {}", lineno + 1),
                    "expected: topic_id Q0 doc_id rank score tag",
                ));
            }
            let score: f64 = f[4].parse().map_err(|_| {
                Error::malformed(format!("run line {}", lineno + 1), "bad score")
            })?;
            topics.entry(f[0].to_string()).or_default().push(ScoredDoc {
                doc_id: f[2].to_string(),
                score: R::cast(score),
            });
        }
        let mut run = RankedRun::new();
        for (topic, mut docs) in topics {
            docs.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            run.add_topic(&topic, docs)?;
        }
        Ok(run)
    }

    pub fn load_trec(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_trec(&raw)
    }
}

/// Non-interpolated average precision of one ranked list.
///
/// `AP = (1/R) * sum over relevant retrieved ranks r of precision@r`,
/// with `R` the qrels' relevant count for the topic. Errors when the
/// topic has no relevant documents.
pub fn average_precision<R: Real>(
    ranking: &[ScoredDoc<R>],
    qrels: &Qrels,
    topic_id: &str,
) -> Result<R> {
    let total_relevant = qrels.relevant_count(topic_id);
    if total_relevant == 0 {
        return Err(Error::NoRelevantDocs { topic_id: topic_id.to_string() });
    }
    let mut hits = 0u64;
    let mut sum = R::zero();
    for (i, d) in ranking.iter().enumerate() {
        if qrels.is_relevant(topic_id, &d.doc_id) {
            hits += 1;
            sum += R::from_count(hits) / R::from_count(i as u64 + 1);
        }
    }
    Ok(sum / R::from_count(total_relevant as u64))
}

/// Interpolated precision at recall 0.0, 0.1, ..., 1.0 for one topic.
/// Levels beyond the last achieved recall get 0; a ranking that retrieves
/// nothing relevant is all zeros.
pub fn recall_precision_curve<R: Real>(
    ranking: &[ScoredDoc<R>],
    qrels: &Qrels,
    topic_id: &str,
) -> Result<[R; CURVE_POINTS]> {
    let total_relevant = qrels.relevant_count(topic_id);
    if total_relevant == 0 {
        return Err(Error::NoRelevantDocs { topic_id: topic_id.to_string() });
    }
    // Precision/recall at each relevant hit.
    let mut points: Vec<(R, R)> = Vec::new();
    let mut hits = 0u64;
    for (i, d) in ranking.iter().enumerate() {
        if qrels.is_relevant(topic_id, &d.doc_id) {
            hits += 1;
            let recall = R::from_count(hits) / R::from_count(total_relevant as u64);
            let precision = R::from_count(hits) / R::from_count(i as u64 + 1);
            points.push((recall, precision));
        }
    }
    let mut curve = [R::zero(); CURVE_POINTS];
    for (level, slot) in curve.iter_mut().enumerate() {
        let rho = R::from_count(level as u64) / R::from_count(10);
        let best = points
            .iter()
            .filter(|(recall, _)| *recall >= rho)
            .map(|(_, p)| *p)
            .fold(R::zero(), R::max);
        *slot = best;
    }
    Ok(curve)
}

/// Evaluation of a run against qrels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport<R: Real = f64> {
    /// Topic -> average precision, for every evaluated topic.
    pub per_topic_ap: BTreeMap<String, R>,
    /// Arithmetic mean AP over the evaluated topics.
    pub mean_ap: R,
    /// Interpolated precision at recall 0.0 ... 1.0, averaged pointwise
    /// over the evaluated topics.
    pub curve: [R; CURVE_POINTS],
    /// Topics present in the run but skipped (no relevant documents in
    /// the qrels, or absent from the qrels entirely).
    pub skipped_topics: Vec<String>,
    /// Human-readable notes about anything skipped or ignored.
    pub warnings: Vec<String>,
}

/// Evaluate every topic of `run` against `qrels`. Topics without
/// relevant documents are skipped with a warning; qrels topics absent
/// from the run are noted but do not affect the scores. An empty run, or
/// one where nothing is evaluable, is an error.
pub fn evaluate_run<R: Real>(run: &RankedRun<R>, qrels: &Qrels) -> Result<EvalReport<R>> {
    if run.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    let mut per_topic_ap = BTreeMap::new();
    let mut curve_sum = [R::zero(); CURVE_POINTS];
    let mut skipped_topics = Vec::new();
    let mut warnings = Vec::new();
    for topic in run.topic_ids() {
        let ranking = run.results(topic).expect("topic_ids come from the map");
        if qrels.relevant_count(topic) == 0 {
            let why = if qrels.has_topic(topic) {
                "no relevant documents"
            } else {
                "not in qrels"
            };
            warnings.push(format!("topic {topic} skipped: {why}"));
            skipped_topics.push(topic.to_string());
            continue;
        }
        let ap = average_precision(ranking, qrels, topic)?;
        let curve = recall_precision_curve(ranking, qrels, topic)?;
        for (sum, c) in curve_sum.iter_mut().zip(curve) {
            *sum += c;
        }
        per_topic_ap.insert(topic.to_string(), ap);
    }
    if per_topic_ap.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    let unused: Vec<&str> = qrels
        .topic_ids()
        .filter(|t| run.results(t).is_none())
        .collect();
    if !unused.is_empty() {
        warnings.push(format!("{} qrels topic(s) not present in the run", unused.len()));
    }
    let n = R::from_count(per_topic_ap.len() as u64);
    let mean_ap = per_topic_ap.values().fold(R::zero(), |acc, &v| acc + v) / n;
    let mut curve = curve_sum;
    for c in curve.iter_mut() {
        *c = *c / n;
    }
    Ok(EvalReport { per_topic_ap, mean_ap, curve, skipped_topics, warnings })
}

/// Average several reports pointwise (mean AP, curve, per-topic AP).
/// Used to combine evaluations across degradation seeds; the reports
/// must cover the same topics.
pub fn average_reports<R: Real>(reports: &[EvalReport<R>]) -> EvalReport<R> {
    assert!(!reports.is_empty(), "cannot average zero reports");
    let n = R::from_count(reports.len() as u64);
    let mut per_topic_ap: BTreeMap<String, R> = BTreeMap::new();
    for r in reports {
        for (t, &ap) in &r.per_topic_ap {
            *per_topic_ap.entry(t.clone()).or_insert_with(R::zero) += ap;
        }
    }
    for v in per_topic_ap.values_mut() {
        *v = *v / n;
    }
    let mean_ap = reports.iter().fold(R::zero(), |acc, r| acc + r.mean_ap) / n;
    let mut curve = [R::zero(); CURVE_POINTS];
    for r in reports {
        for (sum, c) in curve.iter_mut().zip(r.curve) {
            *sum += c;
        }
    }
    for c in curve.iter_mut() {
        *c = *c / n;
    }
    let mut skipped: Vec<String> = reports
        .iter()
        .flat_map(|r| r.skipped_topics.iter().cloned())
        .collect();
    skipped.sort();
    skipped.dedup();
    EvalReport { per_topic_ap, mean_ap, curve, skipped_topics: skipped, warnings: Vec::new() }
}

/// Write a recall/precision curve as a two-column CSV.
pub fn write_curve_csv<R: Real>(curve: &[R; CURVE_POINTS], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("recall,precision\n");
    for (i, p) in curve.iter().enumerate() {
        writeln!(out, "{}.{},{p}", i / 10, i % 10).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
