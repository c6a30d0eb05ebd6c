//! The cross-domain retrieval-under-noise experiment.
//!
//! Two document domains are loaded, each with its own topics and
//! relevance judgments. For each domain the pipeline:
//!
//! 1. builds an Okapi BM25 index over the documents;
//! 2. runs the written (undamaged) queries as a clean baseline;
//! 3. trains one trigram model per domain on that domain's documents,
//!    and measures each model's perplexity, OOV rate, and vocabulary
//!    coverage against this domain's query texts;
//! 4. for every configured noise level, channel-model source, and seed,
//!    degrades the queries through the simulated recognizer, measures
//!    corpus-level word and term error rates, retrieves, and evaluates;
//! 5. averages evaluation results over seeds (the seeds stand in for
//!    different speakers reading the same queries).
//!
//! Pairing each domain's queries with the *other* domain's channel model
//! gives the cross-domain condition: its language model has never seen
//! this domain's content words, so every content word is out of
//! vocabulary for the channel and gets replaced.
//!
//! Everything the run produces lands under `out_dir`: the serialized
//! indexes and models, per-seed degraded query files and run files,
//! recall-precision curves, and a single `report.json` with every
//! number. A rerun with the same config writes byte-identical artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::asrsim::{align, degrade_query, derive_seed, DegradationConfig, ErrorMix};
use crate::corpus::{
    extract_content_words, tokenize, Collection, CollectionFormat, Document, TokenizerConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    average_reports, evaluate_run, load_topics, select_query_field, write_curve_csv, EvalReport,
    Qrels, RankedRun, Topic, TopicDialect,
};
use crate::index::{InvertedIndex, OkapiParams};
use crate::lm::{build_vocabulary, coverage, NGramModel, PerplexityReport};

/// One domain's input files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Short name used in artifact file names and report keys.
    pub name: String,
    pub docs: PathBuf,
    #[serde(default = "default_format")]
    pub format: CollectionFormat,
    pub topics: PathBuf,
    pub dialect: TopicDialect,
    pub qrels: PathBuf,
}

fn default_format() -> CollectionFormat {
    CollectionFormat::Jsonl
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain_a: DomainSpec,
    pub domain_b: DomainSpec,
    /// Vocabulary cap for the language models.
    #[serde(default = "default_v_max")]
    pub v_max: usize,
    /// N-gram order (1..=3).
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub okapi: OkapiParams,
    /// Ranked-list depth per query.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Noise levels to sweep (probability of damaging an in-vocabulary
    /// token).
    #[serde(default = "default_target_wers")]
    pub target_wers: Vec<f64>,
    /// Base seeds; each behaves like a distinct speaker reading every
    /// query, and evaluation results are averaged over them.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mix: ErrorMix,
    #[serde(default = "default_true")]
    pub lowercase: bool,
    /// Optional replacement stoplist (one word per line); the bundled
    /// English list is used when absent.
    #[serde(default)]
    pub stopword_file: Option<PathBuf>,
    /// Minimum judgment grade counted as relevant.
    #[serde(default = "default_threshold")]
    pub relevance_threshold: i32,
    pub out_dir: PathBuf,
}

fn default_v_max() -> usize {
    20_000
}
fn default_order() -> usize {
    3
}
fn default_top_k() -> usize {
    1000
}
fn default_target_wers() -> Vec<f64> {
    vec![0.25]
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4]
}
fn default_true() -> bool {
    true
}
fn default_threshold() -> i32 {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for spec in [&self.domain_a, &self.domain_b] {
            if spec.name.is_empty()
                || !spec.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(Error::InvalidParam(format!(
                    "domain name {:?} must be non-empty and use only [A-Za-z0-9_-]",
                    spec.name
                )));
            }
        }
        if self.domain_a.name == self.domain_b.name {
            return Err(Error::InvalidParam("domain names must differ".into()));
        }
        if self.v_max == 0 {
            return Err(Error::InvalidParam("v_max must be >= 1".into()));
        }
        if !(1..=3).contains(&self.order) {
            return Err(Error::InvalidOrder { order: self.order });
        }
        if self.top_k == 0 {
            return Err(Error::InvalidParam("top_k must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParam("need at least one seed".into()));
        }
        if self.target_wers.is_empty() {
            return Err(Error::InvalidParam("need at least one target noise level".into()));
        }
        for &w in &self.target_wers {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParam(format!(
                    "target noise level {w} outside [0, 1]"
                )));
            }
        }
        self.mix.validate()?;
        OkapiParams::new(self.okapi.k1, self.okapi.b)?;
        Ok(())
    }

    /// The tokenizer every stage of the run shares.
    pub fn tokenizer(&self) -> Result<TokenizerConfig> {
        let mut tok = match &self.stopword_file {
            Some(path) => TokenizerConfig::default().with_stopword_file(path)?,
            None => TokenizerConfig::default(),
        };
        tok.lowercase = self.lowercase;
        Ok(tok)
    }
}

/// Perplexity, OOV rate, and coverage of one channel model measured on
/// one domain's written queries.
#[derive(Debug, Clone, Serialize)]
pub struct LmReport {
    /// Domain the model was trained on.
    pub source: String,
    /// Words in the model's vocabulary (reserved symbols excluded).
    pub vocab_words: usize,
    /// Fraction of the model's own training tokens its vocabulary covers.
    pub train_coverage: f64,
    /// Fraction of this domain's query tokens in the model's vocabulary.
    pub query_coverage: f64,
    pub query_perplexity: f64,
    pub query_oov_rate: f64,
}

/// The clean-text baseline condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub label: String,
    pub run_file: String,
    pub eval: EvalReport,
}

/// One degraded condition: a (noise level, channel model) pair, averaged
/// over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct DegradedReport {
    pub label: String,
    pub lm_source: String,
    pub target_wer: f64,
    pub seeds: Vec<u64>,
    /// Mean over seeds of the corpus-level word error rate (pooled edit
    /// counts over all queries of the seed).
    pub measured_wer: f64,
    /// Mean over seeds of the corpus-level term error rate.
    pub measured_ter: f64,
    pub per_seed_wer: Vec<f64>,
    pub per_seed_ter: Vec<f64>,
    pub per_seed_mean_ap: Vec<f64>,
    /// Evaluation averaged over the seeds' runs.
    pub eval: EvalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainReport {
    pub doc_count: usize,
    pub topic_count: usize,
    pub index_terms: usize,
    /// Channel-model measurements on this domain's queries, keyed by the
    /// model's source domain.
    pub language_models: BTreeMap<String, LmReport>,
    pub text: ConditionReport,
    pub degraded: Vec<DegradedReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub domains: BTreeMap<String, DomainReport>,
}

struct DomainData {
    spec: DomainSpec,
    collection: Collection,
    topics: Vec<Topic>,
    /// (topic_id, query text) in topic-file order.
    queries: Vec<(String, String)>,
    /// The queries as a collection (doc id = topic id), for language-model
    /// measurements.
    query_collection: Collection,
    qrels: Qrels,
}

impl DomainData {
    fn load(spec: &DomainSpec, threshold: i32) -> Result<Self> {
        let name = &spec.name;
        let collection = Collection::load(&spec.docs, spec.format)
            .map_err(Error::in_stage(format!("loading documents of domain {name}")))?;
        let topics = load_topics(&spec.topics, spec.dialect)
            .map_err(Error::in_stage(format!("loading topics of domain {name}")))?;
        if topics.is_empty() {
            return Err(Error::malformed(spec.topics.display().to_string(), "no topics found"));
        }
        let queries: Vec<(String, String)> = topics
            .iter()
            .map(|t| {
                select_query_field(t, spec.dialect)
                    .map(|q| (t.topic_id.clone(), q.to_string()))
                    .map_err(Error::in_stage(format!("selecting queries of domain {name}")))
            })
            .collect::<Result<_>>()?;
        let query_collection = Collection::from_documents(
            queries
                .iter()
                .map(|(id, q)| Document { doc_id: id.clone(), text: q.clone() })
                .collect(),
        )?;
        let qrels = Qrels::load(&spec.qrels, threshold)
            .map_err(Error::in_stage(format!("loading qrels of domain {name}")))?;
        Ok(DomainData {
            spec: spec.clone(),
            collection,
            topics,
            queries,
            query_collection,
            qrels,
        })
    }
}

struct SourceModel {
    name: String,
    model: NGramModel,
    train_coverage: f64,
}

fn train_source(data: &DomainData, config: &ExperimentConfig, tok: &TokenizerConfig) -> Result<SourceModel> {
    let stage = || Error::in_stage(format!("training the {} language model", data.spec.name));
    let (vocab, stats) =
        build_vocabulary::<f64>(&data.collection, tok, config.v_max).map_err(stage())?;
    let model = NGramModel::train(&data.collection, vocab, config.order, tok).map_err(stage())?;
    Ok(SourceModel { name: data.spec.name.clone(), model, train_coverage: stats.coverage })
}

fn wer_label(target_wer: f64) -> String {
    format!("wer{}", (target_wer * 100.0).round() as u32)
}

/// Run the queries (as token lists) against the index and collect a run.
fn retrieve_run(
    index: &InvertedIndex,
    queries: &[(String, Vec<String>)],
    config: &ExperimentConfig,
    tok: &TokenizerConfig,
) -> Result<RankedRun> {
    let mut run = RankedRun::new();
    for (topic_id, tokens) in queries {
        let terms = extract_content_words(tokens, tok);
        let results = if terms.is_empty() {
            Vec::new()
        } else {
            index.search(&terms, config.top_k, &config.okapi)?
        };
        run.add_topic(topic_id, results)?;
    }
    Ok(run)
}

/// Pooled edit counts for corpus-level error rates.
#[derive(Default)]
struct PooledErrors {
    errors: usize,
    ref_len: usize,
}

impl PooledErrors {
    fn add(&mut self, reference: &[String], hyp: &[String]) {
        if reference.is_empty() {
            return;
        }
        let alignment = align(reference, hyp);
        let (s, i, d) = alignment.counts();
        self.errors += s + i + d;
        self.ref_len += reference.len();
    }

    fn rate(&self) -> f64 {
        if self.ref_len == 0 {
            0.0
        } else {
            self.errors as f64 / self.ref_len as f64
        }
    }
}

fn process_domain(
    target: &DomainData,
    sources: &[&SourceModel],
    config: &ExperimentConfig,
    tok: &TokenizerConfig,
) -> Result<DomainReport> {
    let name = &target.spec.name;
    let out = &config.out_dir;
    let stage = |what: &str| Error::in_stage(format!("{what} of domain {name}"));

    let index = InvertedIndex::build(&target.collection, tok).map_err(stage("indexing"))?;
    index.save(out.join("index").join(format!("{name}.json")))?;

    // Written queries, tokenized once; every condition reuses them.
    let written: Vec<(String, Vec<String>)> = target
        .queries
        .iter()
        .map(|(id, q)| (id.clone(), tokenize(q, tok)))
        .collect();

    // Clean-text baseline.
    let text_label = format!("{name}_text");
    let run = retrieve_run(&index, &written, config, tok).map_err(stage("retrieval"))?;
    let run_file = format!("runs/{text_label}.run");
    run.save_trec(out.join(&run_file), &text_label)?;
    let text_eval = evaluate_run(&run, &target.qrels).map_err(stage("evaluation"))?;
    write_curve_csv(&text_eval.curve, out.join("curves").join(format!("{text_label}.csv")))?;
    let text = ConditionReport { label: text_label, run_file, eval: text_eval };

    // Channel-model measurements and degraded conditions.
    let mut language_models = BTreeMap::new();
    let mut degraded_reports = Vec::new();
    for source in sources {
        let lm_stage = |what: &str| {
            Error::in_stage(format!(
                "{what} of domain {name} under the {} channel model",
                source.name
            ))
        };
        let pp: PerplexityReport = source
            .model
            .perplexity(&target.query_collection, tok)
            .map_err(lm_stage("query perplexity"))?;
        let query_coverage = coverage::<f64>(
            source.model.vocabulary(),
            &target.query_collection,
            tok,
        )
        .map_err(lm_stage("query coverage"))?;
        language_models.insert(
            source.name.clone(),
            LmReport {
                source: source.name.clone(),
                vocab_words: source.model.vocabulary().word_count(),
                train_coverage: source.train_coverage,
                query_coverage,
                query_perplexity: pp.perplexity,
                query_oov_rate: pp.oov_rate,
            },
        );

        for &target_wer in &config.target_wers {
            let label = format!("{}_lm_{}", wer_label(target_wer), source.name);
            let mut per_seed_wer = Vec::new();
            let mut per_seed_ter = Vec::new();
            let mut per_seed_mean_ap = Vec::new();
            let mut seed_evals = Vec::new();
            for &seed in &config.seeds {
                let mut wer_pool = PooledErrors::default();
                let mut ter_pool = PooledErrors::default();
                let mut degraded_queries = Vec::with_capacity(written.len());
                let mut tsv = String::new();
                for (query_index, (topic_id, tokens)) in written.iter().enumerate() {
                    let query_seed = derive_seed(seed, query_index as u64);
                    let dc = DegradationConfig::new(&source.model, target_wer, query_seed)?
                        .with_mix(config.mix)?;
                    let degraded = degrade_query(tokens, &dc).map_err(lm_stage("degradation"))?;
                    wer_pool.add(tokens, &degraded);
                    ter_pool.add(
                        &extract_content_words(tokens, tok),
                        &extract_content_words(&degraded, tok),
                    );
                    tsv.push_str(&format!("{topic_id}\t{query_seed}\t{}\n", degraded.join(" ")));
                    degraded_queries.push((topic_id.clone(), degraded));
                }
                let file_stem = format!("{name}_{label}_seed{seed}");
                let tsv_path = out.join("degraded").join(format!("{file_stem}.tsv"));
                fs::write(&tsv_path, tsv).map_err(|e| Error::io(&tsv_path, e))?;

                let run = retrieve_run(&index, &degraded_queries, config, tok)
                    .map_err(stage("retrieval"))?;
                run.save_trec(out.join("runs").join(format!("{file_stem}.run")), &file_stem)?;
                let eval = evaluate_run(&run, &target.qrels).map_err(stage("evaluation"))?;

                per_seed_wer.push(wer_pool.rate());
                per_seed_ter.push(ter_pool.rate());
                per_seed_mean_ap.push(eval.mean_ap);
                seed_evals.push(eval);
            }
            let eval = average_reports(&seed_evals);
            write_curve_csv(
                &eval.curve,
                out.join("curves").join(format!("{name}_{label}.csv")),
            )?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            degraded_reports.push(DegradedReport {
                label: format!("{name}_{label}"),
                lm_source: source.name.clone(),
                target_wer,
                seeds: config.seeds.clone(),
                measured_wer: mean(&per_seed_wer),
                measured_ter: mean(&per_seed_ter),
                per_seed_wer,
                per_seed_ter,
                per_seed_mean_ap,
                eval,
            });
        }
    }

    Ok(DomainReport {
        doc_count: target.collection.len(),
        topic_count: target.topics.len(),
        index_terms: index.term_count(),
        language_models,
        text,
        degraded: degraded_reports,
    })
}

/// Run the whole experiment, writing all artifacts under
/// `config.out_dir` and returning the report that was also written to
/// `report.json`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let tok = config.tokenizer()?;

    let a = DomainData::load(&config.domain_a, config.relevance_threshold)?;
    let b = DomainData::load(&config.domain_b, config.relevance_threshold)?;

    for sub in ["index", "models", "degraded", "runs", "curves"] {
        let dir = config.out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let model_a = train_source(&a, config, &tok)?;
    let model_b = train_source(&b, config, &tok)?;
    for m in [&model_a, &model_b] {
        m.model.save(config.out_dir.join("models").join(format!("{}.lm", m.name)))?;
    }

    let mut domains = BTreeMap::new();
    let sources = [&model_a, &model_b];
    domains.insert(a.spec.name.clone(), process_domain(&a, &sources, config, &tok)?);
    domains.insert(b.spec.name.clone(), process_domain(&b, &sources, config, &tok)?);

    let report = ExperimentReport { config: config.clone(), domains };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let path = config.out_dir.join("report.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Convenience for report consumers: the degraded condition of `domain`
/// matching a noise level and model source, if present.
pub fn find_condition<'r>(
    report: &'r ExperimentReport,
    domain: &str,
    target_wer: f64,
    lm_source: &str,
) -> Option<&'r DegradedReport> {
    report.domains.get(domain)?.degraded.iter().find(|d| {
        d.lm_source == lm_source && (d.target_wer - target_wer).abs() < 1e-12
    })
}
