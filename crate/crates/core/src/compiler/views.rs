//! Retrieval view construction.

use std::collections::HashMap;

use crate::atom::{AtomId, MemoryAtom, RetrievalView, SpanAtom, ViewKind};
use crate::store::MemoryStore;

fn view(owner: AtomId, kind: ViewKind, key: String, targets: Vec<AtomId>) -> RetrievalView {
    RetrievalView { view_id: RetrievalView::canonical_id(owner, kind), owner_atom_id: owner, view_kind: kind, key_text: key, target_claim_ids: targets }
}

/// Claims whose Ω holds `member`, in id order.
pub fn targets_of(store: &MemoryStore, member: &AtomId) -> Vec<AtomId> {
    store.claims_associated_with(member).copied().collect()
}

/// One claim_text view per claim; span_text and span_context views per span
/// (the context key joins the previous, own and next span of the page);
/// handle_alias, time_key and pivot_key views per cue. Emitted in store
/// order.
pub fn build_views(store: &MemoryStore) -> Vec<RetrievalView> {
    let spans: Vec<&SpanAtom> = store.atoms().filter_map(MemoryAtom::as_span).collect();
    let position: HashMap<AtomId, usize> = spans.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut out = Vec::new();
    for atom in store.atoms() {
        let id = atom.id();
        match atom {
            MemoryAtom::Page(_) => {}
            MemoryAtom::Span(s) => {
                let targets = targets_of(store, &id);
                out.push(view(id, ViewKind::SpanText, s.verbatim_text.clone(), targets.clone()));
                let pos = position[&id];
                let same_page = |i: usize| spans.get(i).filter(|x| x.page_id == s.page_id);
                let mut parts = Vec::new();
                if let Some(prev) = pos.checked_sub(1).and_then(same_page) {
                    parts.push(prev.verbatim_text.as_str());
                }
                parts.push(&s.verbatim_text);
                if let Some(next) = same_page(pos + 1) {
                    parts.push(&next.verbatim_text);
                }
                out.push(view(id, ViewKind::SpanContext, parts.join(" "), targets));
            }
            MemoryAtom::Handle(h) => out.push(view(id, ViewKind::HandleAlias, h.surface_text.clone(), targets_of(store, &id))),
            MemoryAtom::Time(t) => {
                let key = match &t.normalized {
                    Some(iv) => format!("{} {}", t.surface_text, iv),
                    None => t.surface_text.clone(),
                };
                out.push(view(id, ViewKind::TimeKey, key, targets_of(store, &id)));
            }
            MemoryAtom::Pivot(v) => out.push(view(id, ViewKind::PivotKey, v.referent_label.clone(), targets_of(store, &id))),
            MemoryAtom::Claim(c) => out.push(view(id, ViewKind::ClaimText, c.claim_text.clone(), vec![id])),
        }
    }
    out
}
