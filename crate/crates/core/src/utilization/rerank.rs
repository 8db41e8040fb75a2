//! Coarse pool by ρ, then fine scoring with the bundle scorer.

use crate::exec::{map_slice, ExecMode};
use crate::projection::CandidateBundle;
use crate::providers::{call_with_limit, BundleScorer, ProviderError};
use crate::store::MemoryStore;

use super::{serialize_bundle, Fallback, ScoredBundle, UtilizationConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RerankOutcome {
    /// The ρ-top-M pool, in ρ order, with the score each received.
    pub pool: Vec<ScoredBundle>,
    /// The s_rank-top-K, in reranked order.
    pub kept: Vec<ScoredBundle>,
    pub fallback: Option<Fallback>,
}

/// Scores the ρ-top `pool_m` bundles and keeps the best `rerank_keep_k` by
/// s_rank (ties by ρ, then head id). `bundles` must already be in ρ order.
/// If any scorer call fails the pool keeps its ρ order and s_rank = ρ.
pub fn rerank_pool(
    bundles: &[CandidateBundle],
    query: &str,
    scorer: &dyn BundleScorer,
    store: &MemoryStore,
    config: &UtilizationConfig,
    mode: ExecMode,
) -> RerankOutcome {
    let pool: Vec<&CandidateBundle> = bundles.iter().take(config.pool_m).collect();
    let texts: Vec<String> = pool
        .iter()
        .map(|b| serialize_bundle(b, store, config.max_span_excerpts, config.max_bundle_chars))
        .collect();
    let scores: Vec<Result<f64, ProviderError>> = map_slice(mode, &texts, |t| {
        call_with_limit(config.provider_timeout, || scorer.score(query, t)).and_then(|s| {
            if s.is_finite() {
                Ok(s)
            } else {
                Err(ProviderError::Malformed(format!("non-finite score {s}")))
            }
        })
    });
    let failure = scores.iter().find_map(|s| s.as_ref().err().cloned());
    let fallback = failure.map(|e| Fallback { stage: "rerank".into(), reason: e.to_string() });
    let pool: Vec<ScoredBundle> = pool
        .into_iter()
        .zip(texts)
        .zip(scores)
        .map(|((b, serialized), s)| ScoredBundle {
            rank_score: if fallback.is_some() { b.rho } else { s.unwrap_or(0.0) },
            bundle: b.clone(),
            serialized,
        })
        .collect();
    let mut kept = pool.clone();
    if fallback.is_none() {
        kept.sort_by(|a, b| {
            b.rank_score
                .total_cmp(&a.rank_score)
                .then(b.bundle.rho.total_cmp(&a.bundle.rho))
                .then(a.bundle.head.cmp(&b.bundle.head))
        });
    }
    kept.truncate(config.rerank_keep_k);
    RerankOutcome { pool, kept, fallback }
}
