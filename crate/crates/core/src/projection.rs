//! Type-constrained projection of fused hits onto claims and consolidation
//! into candidate bundles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::atom::{AtomId, AtomKind};
use crate::retrieval::{FusedHit, RouteId};
use crate::store::{MemoryStore, StoreError};

/// One member of H_a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberHit {
    pub atom_id: AtomId,
    pub s_ret: f64,
    pub contributing_routes: BTreeMap<RouteId, usize>,
}

impl From<&FusedHit> for MemberHit {
    fn from(h: &FusedHit) -> Self {
        Self { atom_id: h.atom_id, s_ret: h.s_ret, contributing_routes: h.contributing_routes.clone() }
    }
}

/// b_a: a claim with its aggregated strength ρ_a and provenance closure E_a.
///
/// `projected` is false only for bundles built by the ablated pipelines that
/// skip projection; their head may then be a non-claim atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateBundle {
    pub head: AtomId,
    pub projected: bool,
    pub rho: f64,
    pub closure: BTreeSet<AtomId>,
    pub member_hits: Vec<MemberHit>,
}

/// Result of projecting a fused list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection {
    pub bundles: Vec<CandidateBundle>,
    /// Hits with an empty projection. Kept for the trace, never scored.
    pub discarded: Vec<FusedHit>,
}

/// Π(h) = {a : o(h) ∈ Ω_a ∪ {a}}.
pub fn project_hit(atom: AtomId, store: &MemoryStore) -> Result<BTreeSet<AtomId>, StoreError> {
    let a = store.get(&atom).ok_or(StoreError::UnknownId(atom))?;
    let mut out: BTreeSet<AtomId> = store.claims_associated_with(&atom).copied().collect();
    if a.kind() == AtomKind::Claim {
        out.insert(atom);
    }
    Ok(out)
}

fn sort_bundles(bundles: &mut [CandidateBundle]) {
    bundles.sort_by(|a, b| b.rho.total_cmp(&a.rho).then(a.head.cmp(&b.head)));
}

/// Groups fused hits by the claims they project to. ρ_a sums the full s_ret
/// of every hit in H_a, in fused order; a hit projecting to several claims
/// counts fully for each.
pub fn build_bundles(fused: &[FusedHit], store: &MemoryStore) -> Result<Projection, StoreError> {
    let mut groups: BTreeMap<AtomId, Vec<MemberHit>> = BTreeMap::new();
    let mut discarded = Vec::new();
    for h in fused {
        let targets = project_hit(h.atom_id, store)?;
        if targets.is_empty() {
            discarded.push(h.clone());
        }
        for a in targets {
            groups.entry(a).or_default().push(MemberHit::from(h));
        }
    }
    let mut bundles = Vec::with_capacity(groups.len());
    for (head, member_hits) in groups {
        let mut closure = store.association_set(&head)?.clone();
        closure.extend(member_hits.iter().map(|m| m.atom_id));
        let rho = member_hits.iter().map(|m| m.s_ret).sum();
        bundles.push(CandidateBundle { head, projected: true, rho, closure, member_hits });
    }
    sort_bundles(&mut bundles);
    Ok(Projection { bundles, discarded })
}

/// One bundle per fused hit, without projection: the hit atom heads its own
/// bundle, closed over its own support. Hits whose kind is not in `heads`
/// are discarded.
pub fn unprojected_bundles(fused: &[FusedHit], store: &MemoryStore, heads: &[AtomKind]) -> Result<Projection, StoreError> {
    let mut out = Projection::default();
    for h in fused {
        let a = store.get(&h.atom_id).ok_or(StoreError::UnknownId(h.atom_id))?;
        if !heads.contains(&a.kind()) {
            out.discarded.push(h.clone());
            continue;
        }
        let mut closure: BTreeSet<AtomId> = a.support().into_iter().collect();
        closure.insert(h.atom_id);
        out.bundles.push(CandidateBundle {
            head: h.atom_id,
            projected: false,
            rho: h.s_ret,
            closure,
            member_hits: vec![MemberHit::from(h)],
        });
    }
    sort_bundles(&mut out.bundles);
    Ok(out)
}
