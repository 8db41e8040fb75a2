//! Multi-route candidate retrieval: query rewriting, BM25 over retrieval
//! views, exact dense scan over claim and span text, and reciprocal rank
//! fusion of the per-route rankings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atom::{AtomId, AtomKind, MemoryAtom, ViewKind};
use crate::exec::{map_slice, ExecMode};
use crate::providers::{Embedder, ProviderError};
use crate::store::MemoryStore;
use crate::text::FunctionWordTable;

pub mod bm25;
pub mod dense;
pub mod fusion;
pub mod rewrite;

pub use bm25::Bm25Index;
pub use dense::DenseTable;
pub use fusion::{fuse_rrf, merge_view_hits};
pub use rewrite::rewrite_query;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrievalError {
    #[error("unknown route {0:?}")]
    UnknownRoute(String),
    #[error("hits from {0} and {1} cannot be merged together")]
    MixedRoutes(RouteId, RouteId),
    #[error("embedder produces {found}-dimensional vectors, configuration expects {expected}")]
    EmbedderDimensionMismatch { expected: usize, found: usize },
    #[error("embedder failed: {0}")]
    Embedder(#[from] ProviderError),
    #[error("invalid retrieval configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteId {
    SparseClaim,
    SparseSpan,
    SparseHandle,
    SparseTime,
    SparsePivot,
    DenseClaim,
    DenseSpan,
}

impl RouteId {
    pub const ALL: [RouteId; 7] = [
        RouteId::SparseClaim,
        RouteId::SparseSpan,
        RouteId::SparseHandle,
        RouteId::SparseTime,
        RouteId::SparsePivot,
        RouteId::DenseClaim,
        RouteId::DenseSpan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RouteId::SparseClaim => "sparse_claim",
            RouteId::SparseSpan => "sparse_span",
            RouteId::SparseHandle => "sparse_handle",
            RouteId::SparseTime => "sparse_time",
            RouteId::SparsePivot => "sparse_pivot",
            RouteId::DenseClaim => "dense_claim",
            RouteId::DenseSpan => "dense_span",
        }
    }

    pub fn is_dense(self) -> bool {
        matches!(self, RouteId::DenseClaim | RouteId::DenseSpan)
    }

    /// View kinds searched by a sparse route. The span route also covers the
    /// context views, which are owned by spans.
    pub fn view_kinds(self) -> &'static [ViewKind] {
        match self {
            RouteId::SparseClaim => &[ViewKind::ClaimText],
            RouteId::SparseSpan => &[ViewKind::SpanText, ViewKind::SpanContext],
            RouteId::SparseHandle => &[ViewKind::HandleAlias],
            RouteId::SparseTime => &[ViewKind::TimeKey],
            RouteId::SparsePivot => &[ViewKind::PivotKey],
            RouteId::DenseClaim | RouteId::DenseSpan => &[],
        }
    }

    /// Atom kind a dense route scans.
    pub fn dense_kind(self) -> Option<AtomKind> {
        match self {
            RouteId::DenseClaim => Some(AtomKind::Claim),
            RouteId::DenseSpan => Some(AtomKind::Span),
            _ => None,
        }
    }
}

impl fmt::Display for RouteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RouteId {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RouteId::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| RetrievalError::UnknownRoute(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub per_route_k: usize,
    pub rrf_k: f64,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub dense_dim: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self { per_route_k: 32, rrf_k: 60.0, bm25_k1: 1.2, bm25_b: 0.75, dense_dim: 1024 }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        let bad = |m: &str| Err(RetrievalError::InvalidConfig(m.to_string()));
        if self.per_route_k == 0 {
            return bad("per_route_k must be at least 1");
        }
        if self.rrf_k.is_nan() || self.rrf_k <= 0.0 {
            return bad("rrf_k must be positive");
        }
        if self.dense_dim == 0 {
            return bad("dense_dim must be positive");
        }
        if self.bm25_k1.is_nan() || self.bm25_k1 < 0.0 || !(0.0..=1.0).contains(&self.bm25_b) {
            return bad("bm25_k1 must be non-negative and bm25_b within [0, 1]");
        }
        Ok(())
    }
}

/// One ranked entry of a route. Sparse hits carry the view that matched;
/// `atom_id` is always the owning atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteHit {
    pub route: RouteId,
    pub atom_id: AtomId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_id: Option<String>,
    pub rank: usize,
    pub raw_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedHit {
    pub atom_id: AtomId,
    pub s_ret: f64,
    pub contributing_routes: BTreeMap<RouteId, usize>,
}

/// Immutable per-route indexes over one store.
#[derive(Debug, Clone, Default)]
pub struct IndexSet {
    pub sparse: BTreeMap<RouteId, Bm25Index>,
    pub dense: BTreeMap<RouteId, DenseTable>,
    pub function_words: FunctionWordTable,
}

fn check_dim(expected: usize, found: usize) -> Result<(), RetrievalError> {
    if expected == found {
        Ok(())
    } else {
        Err(RetrievalError::EmbedderDimensionMismatch { expected, found })
    }
}

/// Builds one inverted index per sparse route and one vector table per dense
/// route. Embedding runs through `mode`.
pub fn build_indexes(
    store: &MemoryStore,
    embedder: &dyn Embedder,
    config: &RetrievalConfig,
    mode: ExecMode,
) -> Result<IndexSet, RetrievalError> {
    config.validate()?;
    check_dim(config.dense_dim, embedder.dim())?;
    let mut set = IndexSet::default();
    for route in RouteId::ALL.into_iter().filter(|r| !r.is_dense()) {
        let kinds = route.view_kinds();
        let docs = store
            .views()
            .iter()
            .filter(|v| kinds.contains(&v.view_kind))
            .map(|v| (v.view_id.as_str(), v.owner_atom_id, v.key_text.as_str()));
        set.sparse.insert(route, Bm25Index::build(docs));
    }
    for route in [RouteId::DenseClaim, RouteId::DenseSpan] {
        let kind = route.dense_kind().expect("dense route");
        let atoms: Vec<&MemoryAtom> = store.atoms_of(kind).collect();
        let vectors = map_slice(mode, &atoms, |a| embedder.embed(a.text()));
        let mut rows = Vec::with_capacity(atoms.len());
        for (a, v) in atoms.iter().zip(vectors) {
            let v = v?;
            check_dim(config.dense_dim, v.len())?;
            rows.push((a.id(), v));
        }
        set.dense.insert(route, DenseTable { rows });
    }
    Ok(set)
}

fn rank_scored(route: RouteId, mut scored: Vec<(AtomId, Option<String>, f64)>) -> Vec<RouteHit> {
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (atom_id, view_id, raw_score))| RouteHit { route, atom_id, view_id, rank: i + 1, raw_score })
        .collect()
}

/// View-level ranking of a sparse route: BM25 per rewritten variant, per-view
/// max across variants, positive scores only.
pub fn sparse_view_hits(variants: &[String], route: RouteId, indexes: &IndexSet, config: &RetrievalConfig) -> Vec<RouteHit> {
    let Some(idx) = indexes.sparse.get(&route) else { return Vec::new() };
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for v in variants {
        for (doc, s) in idx.score(v, config.bm25_k1, config.bm25_b) {
            let e = best.entry(doc).or_insert(s);
            if s > *e {
                *e = s;
            }
        }
    }
    let scored = best
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(d, s)| {
            let doc = &idx.docs()[d];
            (doc.owner, Some(doc.view_id.clone()), s)
        })
        .collect();
    rank_scored(route, scored)
}

/// TopK_d: the atom-level top `per_route_k` of a route. Sparse routes rewrite
/// the query; dense routes embed the original query once, passed in as
/// `query_vector`.
pub fn route_topk(
    variants: &[String],
    query_vector: &[f32],
    route: RouteId,
    indexes: &IndexSet,
    config: &RetrievalConfig,
) -> Result<Vec<RouteHit>, RetrievalError> {
    let mut hits = if route.is_dense() {
        let table = indexes.dense.get(&route).map(|t| t.scan(query_vector)).unwrap_or_default();
        rank_scored(route, table.into_iter().map(|(id, s)| (id, None, s)).collect())
    } else {
        merge_view_hits(&sparse_view_hits(variants, route, indexes, config))?
    };
    hits.truncate(config.per_route_k);
    Ok(hits)
}

/// Everything the retrieval stage produced for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalOutcome {
    pub variants: Vec<String>,
    pub per_route: BTreeMap<RouteId, Vec<RouteHit>>,
    pub fused: Vec<FusedHit>,
}

/// Runs every route (one task per route under `mode`) and fuses the results.
pub fn retrieve(
    query: &str,
    indexes: &IndexSet,
    embedder: &dyn Embedder,
    config: &RetrievalConfig,
    mode: ExecMode,
) -> Result<RetrievalOutcome, RetrievalError> {
    let variants = rewrite_query(query, &indexes.function_words);
    let qv = embedder.embed(query)?;
    check_dim(config.dense_dim, qv.len())?;
    let lists = map_slice(mode, &RouteId::ALL, |r| route_topk(&variants, &qv, *r, indexes, config));
    let mut per_route = BTreeMap::new();
    for (r, hits) in RouteId::ALL.into_iter().zip(lists) {
        per_route.insert(r, hits?);
    }
    let fused = fuse_rrf(&per_route, config.rrf_k);
    Ok(RetrievalOutcome { variants, per_route, fused })
}
