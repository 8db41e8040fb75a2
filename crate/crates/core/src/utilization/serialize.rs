//! ψ_rank: the text form of a bundle seen by the scorer and the selector.

use crate::atom::{AtomKind, MemoryAtom};
use crate::projection::CandidateBundle;
use crate::store::MemoryStore;
use crate::text::truncate_chars;

use super::{Evidence, TemporalCue};

pub fn locator(span: &crate::atom::SpanAtom) -> String {
    format!("p{}:t{}", span.id.page, span.turn_index)
}

/// Time atoms of a closure, ordered by normalized start, undated last, then
/// by id.
pub fn temporal_cues(bundle: &CandidateBundle, store: &MemoryStore) -> Vec<TemporalCue> {
    let mut times: Vec<_> = bundle
        .closure
        .iter()
        .filter(|id| id.kind == AtomKind::Time)
        .filter_map(|id| store.get(id).and_then(MemoryAtom::as_time))
        .collect();
    times.sort_by_key(|t| (t.normalized.is_none(), t.normalized.map(|iv| iv.start), t.id));
    times.into_iter().map(|t| TemporalCue { time_id: t.id, rendering: t.rendering() }).collect()
}

/// Span excerpts of a closure in id order.
pub fn evidence(bundle: &CandidateBundle, store: &MemoryStore) -> Vec<Evidence> {
    bundle
        .closure
        .iter()
        .filter(|id| id.kind == AtomKind::Span)
        .filter_map(|id| store.get(id).and_then(MemoryAtom::as_span))
        .map(|s| Evidence { span_id: s.id, locator: locator(s), excerpt: s.verbatim_text.clone() })
        .collect()
}

/// Head text, then `TIME:` with the rendered cues, then up to
/// `max_excerpts` `EVIDENCE:` lines, capped at `max_chars` bytes.
pub fn serialize_bundle(bundle: &CandidateBundle, store: &MemoryStore, max_excerpts: usize, max_chars: usize) -> String {
    let head = store.get(&bundle.head).map(MemoryAtom::text).unwrap_or_default();
    let mut out = head.to_string();
    let times = temporal_cues(bundle, store);
    if !times.is_empty() {
        let list: Vec<_> = times.into_iter().map(|t| t.rendering).collect();
        out.push_str("\nTIME: ");
        out.push_str(&list.join("; "));
    }
    for e in evidence(bundle, store).into_iter().take(max_excerpts) {
        out.push_str(&format!("\nEVIDENCE: {} \"{}\"", e.locator, e.excerpt));
    }
    truncate_chars(&out, max_chars).to_string()
}
