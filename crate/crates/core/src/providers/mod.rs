//! Provider contracts and their deterministic reference implementations.
//!
//! Every provider output is untrusted: the calling stage validates it before
//! anything reaches the store or the fact interface. LLM-backed providers are
//! described by the prompt assets in [`prompts`] and the adapters in [`llm`];
//! no network client ships with the crate.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::atom::{HandleAtom, PageAtom, PivotAtom, SpanAtom, TimeAtom};
use crate::temporal::DateInterval;
use crate::utilization::{AnswerOutcome, FactInterface};

pub mod embed;
pub mod llm;
pub mod prompts;
pub mod rank;
pub mod reference;

pub use embed::{cosine, HashingEmbedder};
pub use rank::{ExtractiveComposer, OverlapScorer, ThresholdSelector};
pub use reference::{RuleCueExtractor, SentenceClaimWriter, TemplateClaimWriter};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider failed: {0}")]
    Failed(String),
    #[error("malformed provider output: {0}")]
    Malformed(String),
    #[error("provider call took {elapsed:?}, over the {limit:?} limit")]
    Timeout { elapsed: Duration, limit: Duration },
}

/// Runs a provider call and converts an over-limit call into a timeout.
///
/// The limit is checked after the call returns; providers are synchronous
/// and are not interrupted.
pub fn call_with_limit<T>(
    limit: Option<Duration>,
    f: impl FnOnce() -> Result<T, ProviderError>,
) -> Result<T, ProviderError> {
    let started = Instant::now();
    let out = f()?;
    match limit {
        Some(limit) if started.elapsed() > limit => {
            Err(ProviderError::Timeout { elapsed: started.elapsed(), limit })
        }
        _ => Ok(out),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandleProposal {
    pub surface_text: String,
    pub support_span_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeProposal {
    pub surface_text: String,
    #[serde(default)]
    pub normalized: Option<DateInterval>,
    #[serde(default)]
    pub relative_expression: Option<String>,
    pub support_span_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotProposal {
    pub candidate_ref: String,
    pub support_text: String,
    pub referent_label: String,
}

/// Cue extractor output for one page. Span ids are raw strings: they are
/// checked against the page before any atom is created.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueProposals {
    #[serde(default)]
    pub handles: Vec<HandleProposal>,
    #[serde(default)]
    pub times: Vec<TimeProposal>,
    #[serde(default)]
    pub pivots: Vec<PivotProposal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimProposal {
    pub unit_text: String,
    pub support_span_ids: Vec<String>,
    /// When absent the compiler links the page cues whose support overlaps
    /// the claim's support.
    #[serde(default)]
    pub linked_cue_ids: Option<Vec<String>>,
}

/// Validated cues of one page, as handed to the claim writer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageCues {
    pub handles: Vec<HandleAtom>,
    pub times: Vec<TimeAtom>,
    pub pivots: Vec<PivotAtom>,
}

impl PageCues {
    pub fn len(&self) -> usize {
        self.handles.len() + self.times.len() + self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One bundle as offered to the selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorCandidate {
    pub bundle_id: String,
    pub rank: usize,
    pub score: f64,
    pub text: String,
}

/// Raw selector output; validated by the selection stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionProposal {
    pub bundle_id: String,
    pub role: String,
}

/// f_cue: proposes handle, time and pivot cues for a page.
pub trait CueExtractor: Send + Sync {
    fn extract(&self, page: &PageAtom, spans: &[SpanAtom]) -> Result<CueProposals, ProviderError>;
}

/// f_write: proposes claims for a page, given its validated cues.
pub trait ClaimWriter: Send + Sync {
    fn write(
        &self,
        page: &PageAtom,
        spans: &[SpanAtom],
        cues: &PageCues,
        budget: usize,
    ) -> Result<Vec<ClaimProposal>, ProviderError>;
}

/// Dense text encoder with a fixed output dimension.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError>;
}

/// Query–bundle relevance scorer (the cross-encoder slot).
pub trait BundleScorer: Send + Sync {
    fn score(&self, query: &str, serialized_bundle: &str) -> Result<f64, ProviderError>;
}

/// Chooses at most `budget` bundles and assigns each a role.
pub trait BundleSelector: Send + Sync {
    fn select(
        &self,
        query: &str,
        candidates: &[SelectorCandidate],
        budget: usize,
    ) -> Result<Vec<SelectionProposal>, ProviderError>;
}

/// Produces the final answer from the rendered fact interface.
pub trait AnswerComposer: Send + Sync {
    fn compose(
        &self,
        query: &str,
        interface: &FactInterface,
        rendered: &str,
    ) -> Result<AnswerOutcome, ProviderError>;
}

/// The full set of providers used by compilation and querying.
pub struct ProviderSet {
    pub cue_extractor: Box<dyn CueExtractor>,
    pub claim_writer: Box<dyn ClaimWriter>,
    pub embedder: Box<dyn Embedder>,
    pub scorer: Box<dyn BundleScorer>,
    pub selector: Box<dyn BundleSelector>,
    pub composer: Box<dyn AnswerComposer>,
}

impl ProviderSet {
    /// Deterministic reference providers with an embedding dimension of `dim`.
    pub fn reference(dim: usize) -> Self {
        Self {
            cue_extractor: Box::new(RuleCueExtractor::default()),
            claim_writer: Box::new(SentenceClaimWriter::default()),
            embedder: Box::new(HashingEmbedder::new(dim)),
            scorer: Box::new(OverlapScorer::default()),
            selector: Box::new(ThresholdSelector::default()),
            composer: Box::new(ExtractiveComposer),
        }
    }
}

/// A provider that fails every call. Used to exercise degraded modes.
#[derive(Debug, Clone, Default)]
pub struct AlwaysFail;

impl CueExtractor for AlwaysFail {
    fn extract(&self, _: &PageAtom, _: &[SpanAtom]) -> Result<CueProposals, ProviderError> {
        Err(ProviderError::Failed("cue extractor unavailable".into()))
    }
}

impl ClaimWriter for AlwaysFail {
    fn write(&self, _: &PageAtom, _: &[SpanAtom], _: &PageCues, _: usize) -> Result<Vec<ClaimProposal>, ProviderError> {
        Err(ProviderError::Failed("claim writer unavailable".into()))
    }
}

impl BundleScorer for AlwaysFail {
    fn score(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
        Err(ProviderError::Failed("scorer unavailable".into()))
    }
}

impl BundleSelector for AlwaysFail {
    fn select(&self, _: &str, _: &[SelectorCandidate], _: usize) -> Result<Vec<SelectionProposal>, ProviderError> {
        Err(ProviderError::Failed("selector unavailable".into()))
    }
}

impl AnswerComposer for AlwaysFail {
    fn compose(&self, _: &str, _: &FactInterface, _: &str) -> Result<AnswerOutcome, ProviderError> {
        Err(ProviderError::Failed("composer unavailable".into()))
    }
}

/// Cue extractor that proposes nothing.
#[derive(Debug, Clone, Default)]
pub struct NoCues;

impl CueExtractor for NoCues {
    fn extract(&self, _: &PageAtom, _: &[SpanAtom]) -> Result<CueProposals, ProviderError> {
        Ok(CueProposals::default())
    }
}

/// Claim writer that proposes nothing.
#[derive(Debug, Clone, Default)]
pub struct NoClaims;

impl ClaimWriter for NoClaims {
    fn write(&self, _: &PageAtom, _: &[SpanAtom], _: &PageCues, _: usize) -> Result<Vec<ClaimProposal>, ProviderError> {
        Ok(Vec::new())
    }
}
