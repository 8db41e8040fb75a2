//! The query pipeline over one compiled store: retrieval, projection,
//! reranking, selection, fact interface and answer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::atom::{AtomKind, MemoryAtom};
use crate::compiler::build_views;
use crate::exec::ExecMode;
use crate::projection::{build_bundles, unprojected_bundles, CandidateBundle};
use crate::providers::ProviderSet;
use crate::retrieval::{build_indexes, retrieve, FusedHit, IndexSet, RetrievalConfig, RetrievalError, RouteHit, RouteId};
use crate::store::{MemoryStore, StoreError};
use crate::utilization::{
    build_fact_interface, compose_answer, render_interface, rerank_pool, select_bundles, AnswerOutcome,
    FactInterface, RerankOutcome, SelectionOutcome, UtilizationConfig, UtilizationError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Utilization(#[from] UtilizationError),
}

/// Pipeline rewrites that remove one structural stage each.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Drop claims; span hits head their own bundles.
    pub no_claims: bool,
    /// Drop handle, time and pivot atoms and every link to them.
    pub no_cues: bool,
    /// Skip Π: every fused hit heads its own bundle.
    pub no_projection: bool,
    /// Fact records carry no closure, evidence or time cues.
    pub no_bundles: bool,
}

impl AblationFlags {
    pub const NAMES: [&'static str; 4] = ["no_claims", "no_cues", "no_projection", "no_bundles"];

    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(name: &str) -> Option<Self> {
        let mut f = Self::default();
        f.set(name, true).then_some(f)
    }

    /// Sets a flag by name; false if the name is unknown.
    pub fn set(&mut self, name: &str, on: bool) -> bool {
        let slot = match name {
            "no_claims" => &mut self.no_claims,
            "no_cues" => &mut self.no_cues,
            "no_projection" => &mut self.no_projection,
            "no_bundles" => &mut self.no_bundles,
            _ => return false,
        };
        *slot = on;
        true
    }

    pub fn active(&self) -> Vec<&'static str> {
        let on = [self.no_claims, self.no_cues, self.no_projection, self.no_bundles];
        Self::NAMES.into_iter().zip(on).filter(|(_, v)| *v).map(|(n, _)| n).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.active().is_empty()
    }
}

/// Rebuilds `store` without the atoms removed by the store-level ablations,
/// keeping all remaining ids. Views are rebuilt.
pub fn ablate_store(store: &MemoryStore, flags: AblationFlags) -> Result<MemoryStore, StoreError> {
    if !flags.no_claims && !flags.no_cues {
        return Ok(store.clone());
    }
    let mut out = MemoryStore::new(store.meta().clone());
    for atom in store.atoms() {
        let kind = atom.kind();
        if (flags.no_claims && kind == AtomKind::Claim) || (flags.no_cues && kind.is_cue()) {
            continue;
        }
        let mut atom = atom.clone();
        if let (true, MemoryAtom::Claim(c)) = (flags.no_cues, &mut atom) {
            c.linked_cue_ids.clear();
        }
        out.add_atom(atom)?;
    }
    for v in build_views(&out) {
        out.add_view(v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub retrieval: RetrievalConfig,
    pub utilization: UtilizationConfig,
    pub ablation: AblationFlags,
    pub mode: ExecMode,
}

/// Everything one query produced, in pipeline order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query: String,
    pub variants: Vec<String>,
    pub per_route: BTreeMap<RouteId, Vec<RouteHit>>,
    pub fused: Vec<FusedHit>,
    pub discarded: Vec<FusedHit>,
    pub bundles: Vec<CandidateBundle>,
    pub rerank: RerankOutcome,
    pub selection: SelectionOutcome,
    pub interface: FactInterface,
    pub rendered: String,
    pub outcome: Result<AnswerOutcome, UtilizationError>,
}

pub struct Engine {
    store: MemoryStore,
    indexes: IndexSet,
    providers: ProviderSet,
    config: EngineConfig,
}

impl Engine {
    /// Applies the store-level ablations and builds the route indexes.
    pub fn new(store: &MemoryStore, providers: ProviderSet, config: EngineConfig) -> Result<Self, EngineError> {
        config.utilization.validate()?;
        let store = ablate_store(store, config.ablation)?;
        let indexes = build_indexes(&store, providers.embedder.as_ref(), &config.retrieval, config.mode)?;
        Ok(Self { store, indexes, providers, config })
    }

    /// The store queries run against (after ablation).
    pub fn store(&self) -> &MemoryStore {
        &self.store
    }

    pub fn indexes(&self) -> &IndexSet {
        &self.indexes
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn query(&self, query: &str) -> Result<QueryResult, EngineError> {
        let cfg = &self.config;
        let p = &self.providers;
        let r = retrieve(query, &self.indexes, p.embedder.as_ref(), &cfg.retrieval, cfg.mode)?;
        let projection = if cfg.ablation.no_claims {
            unprojected_bundles(&r.fused, &self.store, &[AtomKind::Span])?
        } else if cfg.ablation.no_projection {
            let heads = [AtomKind::Span, AtomKind::Handle, AtomKind::Time, AtomKind::Pivot, AtomKind::Claim];
            unprojected_bundles(&r.fused, &self.store, &heads)?
        } else {
            build_bundles(&r.fused, &self.store)?
        };
        let rerank = rerank_pool(&projection.bundles, query, p.scorer.as_ref(), &self.store, &cfg.utilization, cfg.mode);
        let selection = select_bundles(&rerank.kept, query, p.selector.as_ref(), &cfg.utilization);
        let interface = build_fact_interface(&selection.selected, query, &self.store, !cfg.ablation.no_bundles);
        let rendered = render_interface(&interface);
        let outcome = compose_answer(&interface, p.composer.as_ref(), cfg.utilization.provider_timeout);
        Ok(QueryResult {
            query: query.to_string(),
            variants: r.variants,
            per_route: r.per_route,
            fused: r.fused,
            discarded: projection.discarded,
            bundles: projection.bundles,
            rerank,
            selection,
            interface,
            rendered,
            outcome,
        })
    }
}
