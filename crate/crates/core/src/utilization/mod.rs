//! Coarse-to-fine reranking and selection of candidate bundles, and the fact
//! interface handed to the answer composer.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::projection::CandidateBundle;
use crate::providers::ProviderError;

pub mod facts;
pub mod rerank;
pub mod select;
pub mod serialize;

pub use facts::{build_fact_interface, compose_answer, render_interface};
pub use rerank::{rerank_pool, RerankOutcome};
pub use select::{select_bundles, SelectionOutcome};
pub use serialize::serialize_bundle;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UtilizationError {
    #[error("invalid utilization configuration: {0}")]
    InvalidConfig(String),
    #[error("answer composer failed: {0}")]
    ComposerFailure(ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Direct,
    Support,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Direct => "direct",
            Role::Support => "support",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Role::Direct),
            "support" => Ok(Role::Support),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationConfig {
    pub pool_m: usize,
    pub rerank_keep_k: usize,
    pub select_budget_x: usize,
    pub max_span_excerpts: usize,
    pub max_bundle_chars: usize,
    /// Per provider call; `None` disables the check.
    pub provider_timeout: Option<Duration>,
}

impl Default for UtilizationConfig {
    fn default() -> Self {
        Self {
            pool_m: 32,
            rerank_keep_k: 32,
            select_budget_x: 6,
            max_span_excerpts: 3,
            max_bundle_chars: 1200,
            provider_timeout: Some(Duration::from_secs(30)),
        }
    }
}

impl UtilizationConfig {
    pub fn validate(&self) -> Result<(), UtilizationError> {
        let bad = |m: &str| Err(UtilizationError::InvalidConfig(m.to_string()));
        if self.pool_m == 0 || self.rerank_keep_k == 0 {
            return bad("pool_m and rerank_keep_k must be positive");
        }
        if self.rerank_keep_k > self.pool_m {
            return bad("rerank_keep_k must not exceed pool_m");
        }
        if self.select_budget_x == 0 {
            return bad("select_budget_x must be at least 1");
        }
        Ok(())
    }
}

/// A reranked bundle with its s_rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredBundle {
    pub bundle: CandidateBundle,
    pub rank_score: f64,
    /// ψ_rank serialization seen by the scorer and selector.
    pub serialized: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedBundle {
    pub bundle: CandidateBundle,
    pub role: Role,
    pub rank_score: f64,
}

/// A span excerpt quoted verbatim, with its `p{page}:t{turn}` locator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub span_id: AtomId,
    pub locator: String,
    pub excerpt: String,
}

/// A rendered time cue from a record's closure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalCue {
    pub time_id: AtomId,
    pub rendering: String,
}

/// f_i = ⟨claim text, provenance, temporal cues, role⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactRecord {
    pub head: AtomId,
    pub claim_text: String,
    /// E_i, sorted.
    pub provenance: Vec<AtomId>,
    /// Excerpts of the span atoms in `provenance`, in id order.
    pub evidence: Vec<Evidence>,
    pub temporal_cues: Vec<TemporalCue>,
    pub role: Role,
    pub rank_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactInterface {
    pub query: String,
    pub records: Vec<FactRecord>,
    pub sufficiency_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AnswerOutcome {
    /// `cited` holds 1-based record indices.
    Answer { text: String, cited: Vec<usize> },
    InsufficientEvidence,
}

impl AnswerOutcome {
    pub fn is_insufficient(&self) -> bool {
        matches!(self, AnswerOutcome::InsufficientEvidence)
    }
}

/// A provider failure that the pipeline absorbed by falling back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fallback {
    pub stage: String,
    pub reason: String,
}
