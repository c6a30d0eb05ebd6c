//! Subcommand definitions and their implementations.
//!
//! Every command is a thin wrapper: flags map onto library types, the
//! library does the work, results land in files or on stdout. Commands
//! that take a `--seed` are bit-reproducible across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Write one line to stdout, leaving quietly when the reader has gone
/// away — e.g. when the output is piped into `head`. `emit!` would
/// panic on the broken pipe instead.
fn emit_line(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_fmt(args).and_then(|()| out.write_all(b"\n")).is_err() {
        std::process::exit(0);
    }
}

macro_rules! emit {
    ($($arg:tt)*) => {
        emit_line(std::format_args!($($arg)*))
    };
}

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use voxir::asrsim::{degrade_query, derive_seed, DegradationConfig, ErrorMix, ErrorRates};
use voxir::corpus::{extract_content_words, tokenize, Collection, CollectionFormat, TokenizerConfig};
use voxir::error::{Error, Result};
use voxir::eval::{
    evaluate_run, load_topics, select_query_field, write_curve_csv, Qrels, RankedRun, TopicDialect,
};
use voxir::experiment::{self, ExperimentConfig, ExperimentReport};
use voxir::index::{InvertedIndex, OkapiParams};
use voxir::lm::{build_vocabulary, coverage, LmStats, NGramModel, PerplexityReport};
use voxir::synth::{generate, write_to_dir, SynthConfig};

#[derive(Parser)]
#[command(
    name = "voxir",
    version,
    about = "Text retrieval under simulated speech-recognition noise",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build an inverted index from a document collection.
    Index(IndexArgs),
    /// Rank an indexed collection for one query with Okapi BM25.
    Search(SearchArgs),
    /// Train a Witten-Bell n-gram language model.
    LmTrain(LmTrainArgs),
    /// Measure perplexity, OOV rate, and coverage of a model on a collection.
    LmEval(LmEvalArgs),
    /// Pass written queries through the seeded recognition-noise channel.
    Degrade(DegradeArgs),
    /// Score degraded queries against their written forms (WER and TER).
    ScoreErrors(ScoreErrorsArgs),
    /// Score a ranked run against relevance judgments (AP, 11-point curve).
    Evaluate(EvaluateArgs),
    /// Generate the bundled two-domain synthetic corpus pair.
    GenSynthetic(GenSyntheticArgs),
    /// Run the full cross-domain experiment from a config file.
    Experiment(ExperimentArgs),
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(a) => run_index(a),
        Command::Search(a) => run_search(a),
        Command::LmTrain(a) => run_lm_train(a),
        Command::LmEval(a) => run_lm_eval(a),
        Command::Degrade(a) => run_degrade(a),
        Command::ScoreErrors(a) => run_score_errors(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::GenSynthetic(a) => run_gen_synthetic(a),
        Command::Experiment(a) => run_experiment(a),
    }
}

/// Collection file format, as a flag value.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    TrecSgml,
}

impl From<FormatArg> for CollectionFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => CollectionFormat::Jsonl,
            FormatArg::TrecSgml => CollectionFormat::TrecSgml,
        }
    }
}

/// Topic file dialect, as a flag value.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DialectArg {
    Ntcir,
    Irex,
}

impl From<DialectArg> for TopicDialect {
    fn from(d: DialectArg) -> Self {
        match d {
            DialectArg::Ntcir => TopicDialect::Ntcir,
            DialectArg::Irex => TopicDialect::Irex,
        }
    }
}

fn tokenizer(lowercase: bool, stopwords: Option<&Path>) -> Result<TokenizerConfig> {
    let mut config = match stopwords {
        Some(path) => TokenizerConfig::default().with_stopword_file(path)?,
        None => TokenizerConfig::default(),
    };
    config.lowercase = lowercase;
    Ok(config)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io { path: path.into(), source: e })
}

// ---------------------------------------------------------------- index

#[derive(Args)]
pub struct IndexArgs {
    /// Document collection file.
    #[arg(long)]
    collection: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    format: FormatArg,
    /// Lowercase tokens before indexing.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    lowercase: bool,
    /// Replacement stoplist (one word per line); the bundled English
    /// list applies otherwise.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Output index file (JSON).
    #[arg(long)]
    out: PathBuf,
}

fn run_index(a: IndexArgs) -> Result<()> {
    let config = tokenizer(a.lowercase, a.stopwords.as_deref())?;
    let collection = Collection::load(&a.collection, a.format.into())?;
    let index = InvertedIndex::build(&collection, &config)?;
    index.save(&a.out)?;
    emit!(
        "documents={} terms={} avg_doc_length={} index={}",
        index.doc_count(),
        index.term_count(),
        index.average_doc_length::<f64>(),
        a.out.display()
    );
    Ok(())
}

// --------------------------------------------------------------- search

#[derive(Args)]
pub struct SearchArgs {
    /// Index file produced by `index`.
    #[arg(long)]
    index: PathBuf,
    /// Query text; tokenized with the index's own tokenizer, stopwords
    /// dropped.
    #[arg(long)]
    query: String,
    /// Ranked-list depth.
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    /// Topic id written in the output lines.
    #[arg(long, default_value = "q1")]
    topic_id: String,
    /// Run tag written in the output lines.
    #[arg(long, default_value = "voxir")]
    tag: String,
    /// Write the ranking here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_search(a: SearchArgs) -> Result<()> {
    let index = InvertedIndex::load_file(&a.index)?;
    let params = OkapiParams::new(a.k1, a.b)?;
    let config = index.tokenizer_config();
    let tokens = tokenize(&a.query, &config);
    let terms = extract_content_words(&tokens, &config);
    let hits = index.search::<f64>(&terms, a.k, &params)?;
    let mut run = RankedRun::new();
    run.add_topic(&a.topic_id, hits)?;
    match &a.out {
        Some(path) => run.save_trec(path, &a.tag)?,
        None => print!("{}", run.to_trec(&a.tag)),
    }
    Ok(())
}

// ------------------------------------------------------------- lm-train

#[derive(Args)]
pub struct LmTrainArgs {
    /// Training collection.
    #[arg(long)]
    collection: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    format: FormatArg,
    /// N-gram order (1, 2, or 3).
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Vocabulary cap: keep the most frequent words up to this count.
    #[arg(long, default_value_t = 20000)]
    v_max: usize,
    /// Lowercase tokens before counting.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    lowercase: bool,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

fn run_lm_train(a: LmTrainArgs) -> Result<()> {
    let config = tokenizer(a.lowercase, None)?;
    let collection = Collection::load(&a.collection, a.format.into())?;
    let (vocab, stats): (_, LmStats) = build_vocabulary(&collection, &config, a.v_max)?;
    let model = NGramModel::train(&collection, vocab, a.order, &config)?;
    model.save(&a.out)?;
    emit!(
        "vocab_words={} types={} train_tokens={} train_coverage={} order={} model={}",
        model.vocabulary().word_count(),
        stats.types,
        stats.tokens,
        stats.coverage,
        model.order(),
        a.out.display()
    );
    Ok(())
}

// -------------------------------------------------------------- lm-eval

#[derive(Args)]
pub struct LmEvalArgs {
    /// Model file produced by `lm-train`.
    #[arg(long)]
    model: PathBuf,
    /// Test collection.
    #[arg(long)]
    collection: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    format: FormatArg,
    /// Must match the casing used at training time.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    lowercase: bool,
}

fn run_lm_eval(a: LmEvalArgs) -> Result<()> {
    let model = NGramModel::load_file(&a.model)?;
    let config = tokenizer(a.lowercase, None)?;
    let collection = Collection::load(&a.collection, a.format.into())?;
    let pp: PerplexityReport = model.perplexity(&collection, &config)?;
    let cov: f64 = coverage(model.vocabulary(), &collection, &config)?;
    emit!(
        "perplexity={} oov_rate={} coverage={} vocab_words={}",
        pp.perplexity,
        pp.oov_rate,
        cov,
        model.vocabulary().word_count()
    );
    Ok(())
}

// -------------------------------------------------------------- degrade

#[derive(Args)]
pub struct DegradeArgs {
    /// Channel language model.
    #[arg(long)]
    model: PathBuf,
    /// Topic file whose query fields are degraded.
    #[arg(long)]
    topics: PathBuf,
    #[arg(long, value_enum)]
    dialect: DialectArg,
    /// Probability of damaging an in-vocabulary token (out-of-vocabulary
    /// tokens are always replaced).
    #[arg(long)]
    target_wer: f64,
    /// Base seed; each query uses a seed derived from it and the query's
    /// position, so runs are bit-reproducible.
    #[arg(long)]
    seed: u64,
    /// Probability that a damaged token becomes a substitution.
    #[arg(long, default_value_t = ErrorMix::default().p_sub)]
    p_sub: f64,
    /// Probability that a damaged token is deleted.
    #[arg(long, default_value_t = ErrorMix::default().p_del)]
    p_del: f64,
    /// Probability that a damaged token gains an inserted neighbor.
    #[arg(long, default_value_t = ErrorMix::default().p_ins)]
    p_ins: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    lowercase: bool,
    /// Output TSV: topic_id, derived seed, degraded text.
    #[arg(long)]
    out: PathBuf,
}

fn run_degrade(a: DegradeArgs) -> Result<()> {
    let model = NGramModel::load_file(&a.model)?;
    let dialect: TopicDialect = a.dialect.into();
    let topics = load_topics(&a.topics, dialect)?;
    let config = tokenizer(a.lowercase, None)?;
    let mix = ErrorMix { p_sub: a.p_sub, p_del: a.p_del, p_ins: a.p_ins };
    let mut out = String::new();
    for (qi, topic) in topics.iter().enumerate() {
        let text = select_query_field(topic, dialect)?;
        let tokens = tokenize(text, &config);
        let seed = derive_seed(a.seed, qi as u64);
        let channel = DegradationConfig::new(&model, a.target_wer, seed)?.with_mix(mix)?;
        let emitted = degrade_query(&tokens, &channel)?;
        writeln!(out, "{}\t{}\t{}", topic.topic_id, seed, emitted.join(" "))
            .expect("string writes cannot fail");
    }
    write_file(&a.out, &out)?;
    emit!(
        "queries={} target_wer={} seed={} out={}",
        topics.len(),
        a.target_wer,
        a.seed,
        a.out.display()
    );
    Ok(())
}

// --------------------------------------------------------- score-errors

#[derive(Args)]
pub struct ScoreErrorsArgs {
    /// Topic file holding the written (reference) queries.
    #[arg(long)]
    topics: PathBuf,
    #[arg(long, value_enum)]
    dialect: DialectArg,
    /// Degraded-query TSV produced by `degrade`.
    #[arg(long)]
    degraded: PathBuf,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    lowercase: bool,
    /// Replacement stoplist for the term error rate's content-word
    /// extraction.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Also print one line per query.
    #[arg(long)]
    per_topic: bool,
}

/// Corpus-level pooling: total edit errors over total reference length.
#[derive(Default)]
struct Pool {
    errors: usize,
    ref_len: usize,
}

impl Pool {
    fn add(&mut self, rates: &ErrorRates) {
        self.errors += rates.substitutions + rates.insertions + rates.deletions;
        self.ref_len += rates.ref_length;
    }

    fn rate(&self) -> f64 {
        self.errors as f64 / self.ref_len as f64
    }
}

fn run_score_errors(a: ScoreErrorsArgs) -> Result<()> {
    let dialect: TopicDialect = a.dialect.into();
    let topics = load_topics(&a.topics, dialect)?;
    let config = tokenizer(a.lowercase, a.stopwords.as_deref())?;
    let raw = read_file(&a.degraded)?;

    let mut references = std::collections::HashMap::new();
    for topic in &topics {
        let text = select_query_field(topic, dialect)?;
        references.insert(topic.topic_id.as_str(), tokenize(text, &config));
    }

    let mut wer_pool = Pool::default();
    let mut ter_pool = Pool::default();
    let mut scored = 0usize;
    for (lineno, line) in raw.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let location = format!("{}, line {}", a.degraded.display(), lineno + 1);
        let mut fields = line.splitn(3, '\t');
        let topic_id = fields.next().unwrap_or("");
        let (_seed, text) = match (fields.next(), fields.next()) {
            (Some(seed), Some(text)) => (seed, text),
            _ => {
                return Err(Error::MalformedRecord {
                    location,
                    reason: "expected topic_id<TAB>seed<TAB>text".into(),
                })
            }
        };
        let reference = references.get(topic_id).ok_or_else(|| Error::MalformedRecord {
            location: location.clone(),
            reason: format!("topic {topic_id:?} is not in the topic file"),
        })?;
        let hyp: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let wer: ErrorRates = voxir::asrsim::word_error_rate(reference, &hyp)?;
        let ter: ErrorRates = voxir::asrsim::term_error_rate(reference, &hyp, &config)?;
        wer_pool.add(&wer);
        ter_pool.add(&ter);
        scored += 1;
        if a.per_topic {
            emit!("topic {topic_id} wer={} ter={}", wer.rate, ter.rate);
        }
    }
    if scored == 0 {
        return Err(Error::MalformedRecord {
            location: a.degraded.display().to_string(),
            reason: "no degraded queries to score".into(),
        });
    }
    emit!("wer={} ter={} queries={}", wer_pool.rate(), ter_pool.rate(), scored);
    Ok(())
}

// ------------------------------------------------------------- evaluate

#[derive(Args)]
pub struct EvaluateArgs {
    /// Ranked run file (six whitespace-separated columns per line).
    #[arg(long)]
    run: PathBuf,
    /// Relevance judgments (topic, iteration, doc, grade).
    #[arg(long)]
    qrels: PathBuf,
    /// Minimum judgment grade counted as relevant.
    #[arg(long, default_value_t = 1)]
    threshold: i32,
    /// Write the averaged 11-point precision curve to this CSV file.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Print the full evaluation as JSON instead of text lines.
    #[arg(long)]
    json: bool,
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let run = RankedRun::<f64>::load_trec(&a.run)?;
    let qrels = Qrels::load(&a.qrels, a.threshold)?;
    let report = evaluate_run(&run, &qrels)?;
    if a.json {
        emit!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for (topic, ap) in &report.per_topic_ap {
            emit!("ap {topic} = {ap:.4}");
        }
        emit!("map = {:.4}", report.mean_ap);
        for warning in &report.warnings {
            eprintln!("warning: {warning}");
        }
    }
    if let Some(path) = &a.curve {
        write_curve_csv(&report.curve, path)?;
    }
    Ok(())
}

// -------------------------------------------------------- gen-synthetic

#[derive(Args)]
pub struct GenSyntheticArgs {
    /// Output directory for documents, topics, qrels, and manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().docs_per_domain)]
    docs_per_domain: usize,
    #[arg(long, default_value_t = SynthConfig::default().topics_per_domain)]
    topics_per_domain: usize,
    #[arg(long, default_value_t = SynthConfig::default().background_words)]
    background_words: usize,
    #[arg(long, default_value_t = SynthConfig::default().sentences_per_doc)]
    sentences_per_doc: usize,
    #[arg(long, default_value_t = SynthConfig::default().words_per_sentence)]
    words_per_sentence: usize,
    #[arg(long, default_value_t = SynthConfig::default().zipf_exponent)]
    zipf_exponent: f64,
}

fn run_gen_synthetic(a: GenSyntheticArgs) -> Result<()> {
    let config = SynthConfig {
        seed: a.seed,
        docs_per_domain: a.docs_per_domain,
        topics_per_domain: a.topics_per_domain,
        background_words: a.background_words,
        sentences_per_doc: a.sentences_per_doc,
        words_per_sentence: a.words_per_sentence,
        zipf_exponent: a.zipf_exponent,
    };
    let pair = generate(&config)?;
    let paths = write_to_dir(&pair, &config, &a.out)?;
    emit!(
        "documents_per_domain={} topics_per_domain={} dir={}",
        config.docs_per_domain,
        config.topics_per_domain,
        a.out.display()
    );
    emit!("docs_a={}", paths.docs_a.display());
    emit!("docs_b={}", paths.docs_b.display());
    emit!("topics_a={}", paths.topics_a.display());
    emit!("topics_b={}", paths.topics_b.display());
    emit!("qrels_a={}", paths.qrels_a.display());
    emit!("qrels_b={}", paths.qrels_b.display());
    Ok(())
}

// ----------------------------------------------------------- experiment

#[derive(Args)]
pub struct ExperimentArgs {
    /// Experiment configuration file (TOML mirroring the config schema).
    #[arg(long)]
    config: PathBuf,
    /// Override any config key by dotted path before parsing, e.g.
    /// `--set v_max=5000` or `--set domain_a.docs=other.jsonl`. The
    /// value is read as a TOML value, or as a string when that fails.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    v_max: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Comma-separated base seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    target_wers: Option<Vec<f64>>,
}

fn apply_set(table: &mut toml::Table, kv: &str) -> Result<()> {
    let (key, value) = kv.split_once('=').ok_or_else(|| {
        Error::InvalidParam(format!("--set expects KEY=VALUE, got {kv:?}"))
    })?;
    let parsed = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed table has the key"),
        Err(_) => toml::Value::String(value.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                Error::InvalidParam(format!("--set path {key:?} crosses a non-table value"))
            })?;
    }
    current.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn run_experiment(a: ExperimentArgs) -> Result<()> {
    let raw = read_file(&a.config)?;
    let mut table: toml::Table = raw.parse().map_err(|e: toml::de::Error| Error::MalformedRecord {
        location: a.config.display().to_string(),
        reason: e.to_string(),
    })?;
    for kv in &a.set {
        apply_set(&mut table, kv)?;
    }
    let mut config: ExperimentConfig =
        table.try_into().map_err(|e: toml::de::Error| Error::MalformedRecord {
            location: a.config.display().to_string(),
            reason: e.to_string(),
        })?;
    if let Some(v) = a.out_dir {
        config.out_dir = v;
    }
    if let Some(v) = a.v_max {
        config.v_max = v;
    }
    if let Some(v) = a.order {
        config.order = v;
    }
    if let Some(v) = a.top_k {
        config.top_k = v;
    }
    if let Some(v) = a.seeds {
        config.seeds = v;
    }
    if let Some(v) = a.target_wers {
        config.target_wers = v;
    }
    let report = experiment::run(&config)?;
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    for (name, domain) in &report.domains {
        emit!(
            "domain {name}: documents={} topics={} index_terms={} text_map={:.4}",
            domain.doc_count, domain.topic_count, domain.index_terms, domain.text.eval.mean_ap
        );
        emit!(
            "  {:<16} {:>8} {:>8} {:>8} {:>12} {:>8}",
            "condition", "AP", "WER", "TER", "PP", "OOV"
        );
        for cond in &domain.degraded {
            let lm = &domain.language_models[&cond.lm_source];
            emit!(
                "  {:<16} {:>8.4} {:>8.4} {:>8.4} {:>12.2} {:>8.4}",
                cond.label,
                cond.eval.mean_ap,
                cond.measured_wer,
                cond.measured_ter,
                lm.query_perplexity,
                lm.query_oov_rate
            );
        }
    }
    emit!("report={}", report.config.out_dir.join("report.json").display());
}
