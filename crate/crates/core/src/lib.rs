//! Desk-scale workbench for studying how speech-recognition noise affects
//! text retrieval.
//!
//! The pipeline: load a document collection ([`corpus`]), build an inverted
//! index and rank with Okapi BM25 ([`index`]), train Witten-Bell smoothed
//! n-gram language models ([`lm`]), push written queries through a seeded
//! noisy channel that imitates a speech recognizer ([`asrsim`]), and score
//! the damage with WER/TER on the transcripts and average precision on the
//! rankings ([`eval`]). [`synth`] builds two-domain synthetic corpora so the
//! whole loop can run hermetically, and [`experiment`] orchestrates the
//! cross-domain comparison end to end.
//!
//! Real-valued math (scores, probabilities, rates) is generic over the
//! [`Real`] scalar trait; `f32` and `f64` both work, and the unsuffixed
//! types default to `f64`. Counting machinery stays in plain integers.

pub mod asrsim;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod index;
pub mod lm;
pub mod scalar;
pub mod synth;

pub use asrsim::{align, degrade_query, word_error_rate, term_error_rate};
pub use asrsim::{Alignment, DegradationConfig, ErrorMix, ErrorRates};
pub use corpus::{extract_content_words, tokenize, Collection, CollectionFormat, Document, TokenizerConfig};
pub use error::{Error, Result};
pub use eval::{average_precision, evaluate_run, recall_precision_curve};
pub use eval::{parse_topics, select_query_field, EvalReport, Qrels, RankedRun, Topic, TopicDialect};
pub use experiment::{DomainSpec, ExperimentConfig, ExperimentReport};
pub use index::{InvertedIndex, OkapiParams, ScoredDoc};
pub use lm::{build_vocabulary, coverage, LmStats, NGramModel, PerplexityReport, SequenceScore, Vocabulary};
pub use scalar::Real;
pub use synth::{SynthConfig, SynthPair};

/// Scalar used by the CLI, the experiment pipeline, and the unsuffixed
/// type aliases below.
pub type Scalar = f64;

/// `f32` instantiations of the value-carrying types, for callers that want
/// the narrow scalar. The unsuffixed names (`OkapiParams` etc.) are the
/// `f64` forms.
pub type OkapiParams32 = index::OkapiParams<f32>;
pub type ScoredDoc32 = index::ScoredDoc<f32>;
pub type ErrorRates32 = asrsim::ErrorRates<f32>;
pub type LmStats32 = lm::LmStats<f32>;
pub type EvalReport32 = eval::EvalReport<f32>;
