//! View-to-atom hit merging and reciprocal rank fusion.

use std::collections::{BTreeMap, HashMap};

use super::{FusedHit, RetrievalError, RouteHit, RouteId};
use crate::atom::AtomId;

/// Collapses view-level hits of one route onto their owner atoms, keeping the
/// best (smallest) rank per atom and re-densifying ranks to `1..=n`.
pub fn merge_view_hits(hits: &[RouteHit]) -> Result<Vec<RouteHit>, RetrievalError> {
    let Some(first) = hits.first() else { return Ok(Vec::new()) };
    if let Some(other) = hits.iter().find(|h| h.route != first.route) {
        return Err(RetrievalError::MixedRoutes(first.route, other.route));
    }
    if first.route.is_dense() {
        return Ok(hits.to_vec());
    }
    let mut best: HashMap<AtomId, &RouteHit> = HashMap::new();
    for h in hits {
        best.entry(h.atom_id)
            .and_modify(|b| {
                if (h.rank, &h.view_id) < (b.rank, &b.view_id) {
                    *b = h;
                }
            })
            .or_insert(h);
    }
    let mut merged: Vec<RouteHit> = best.into_values().cloned().collect();
    merged.sort_by(|a, b| a.rank.cmp(&b.rank).then(a.atom_id.cmp(&b.atom_id)));
    for (i, h) in merged.iter_mut().enumerate() {
        h.rank = i + 1;
    }
    Ok(merged)
}

/// s_ret(x|q) = Σ_d 1 / (rrf_k + rank_d(x)), summed in route order, sorted
/// by score descending then atom id.
pub fn fuse_rrf(per_route: &BTreeMap<RouteId, Vec<RouteHit>>, rrf_k: f64) -> Vec<FusedHit> {
    let mut acc: BTreeMap<AtomId, FusedHit> = BTreeMap::new();
    for (route, hits) in per_route {
        for h in hits {
            let e = acc.entry(h.atom_id).or_insert_with(|| FusedHit {
                atom_id: h.atom_id,
                s_ret: 0.0,
                contributing_routes: BTreeMap::new(),
            });
            e.s_ret += 1.0 / (rrf_k + h.rank as f64);
            e.contributing_routes.insert(*route, h.rank);
        }
    }
    let mut out: Vec<FusedHit> = acc.into_values().collect();
    out.sort_by(|a, b| b.s_ret.total_cmp(&a.s_ret).then(a.atom_id.cmp(&b.atom_id)));
    out
}
