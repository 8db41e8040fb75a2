//! Corpus loading, pipeline profiles, the evaluation harness and synthetic
//! corpora for scale checks.

pub mod corpus;
pub mod eval;
pub mod profile;
pub mod synthetic;

pub use corpus::{load_jsonl_corpus, load_locomo_corpus, parse_timestamp, CorpusError};
pub use eval::{evaluate, load_queries, EvalError, EvalQuery, EvalReport, VariantMetrics};
pub use profile::{ConfigError, PipelineProfile, ProfileName};
