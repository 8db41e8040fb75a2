//! Gatekeeping of provider proposals. Nothing a provider returns reaches the
//! store without passing these checks.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::atom::{AtomId, AtomKind, ClaimAtom, HandleAtom, MemoryAtom, PivotAtom, SpanAtom, TimeAtom};
use crate::providers::{ClaimProposal, CueProposals, PageCues};
use crate::store::MemoryStore;
use crate::text::truncate_chars;

use super::report::Rejection;

const EXCERPT_BYTES: usize = 200;

pub(crate) fn rejection(page: AtomId, provider: &str, reason: impl Into<String>, payload: &impl Serialize) -> Rejection {
    let json = serde_json::to_string(payload).unwrap_or_default();
    Rejection {
        page_id: page,
        provider: provider.to_string(),
        reason: reason.into(),
        payload_excerpt: truncate_chars(&json, EXCERPT_BYTES).to_string(),
    }
}

/// Resolves proposed support ids against an allowed span set. The reason
/// strings name the store error the id would have caused.
fn resolve_support(ids: &[String], allowed: &HashMap<AtomId, &SpanAtom>, page: AtomId) -> Result<Vec<AtomId>, String> {
    if ids.is_empty() {
        return Err("SupportViolation: empty support".into());
    }
    let mut out = Vec::with_capacity(ids.len());
    for raw in ids {
        let id: AtomId = raw.parse().map_err(|_| format!("DanglingReference: malformed span id {raw:?}"))?;
        if id.kind != AtomKind::Span {
            return Err(format!("SupportViolation: {id} is not a span"));
        }
        if !allowed.contains_key(&id) {
            return Err(if id.page != page.page {
                format!("DanglingReference: {id} is not a span of {page}")
            } else {
                format!("DanglingReference: no span {id}")
            });
        }
        if out.contains(&id) {
            return Err(format!("InvalidAtom: repeated support span {id}"));
        }
        out.push(id);
    }
    Ok(out)
}

fn cited_contains(support: &[AtomId], spans: &HashMap<AtomId, &SpanAtom>, needle: &str) -> bool {
    !needle.trim().is_empty() && support.iter().any(|s| spans[s].verbatim_text.contains(needle))
}

/// Validates cue proposals against the spans of their own page and assigns
/// page-local ids in proposal order.
pub fn validate_cues(page: AtomId, spans: &[SpanAtom], proposals: &CueProposals) -> (PageCues, Vec<Rejection>) {
    let allowed: HashMap<AtomId, &SpanAtom> = spans.iter().map(|s| (s.id, s)).collect();
    let mut cues = PageCues::default();
    let mut rejected = Vec::new();
    let provider = "cue_extractor";
    let next = |kind: AtomKind, n: usize| AtomId::new(kind, page.page, n as u32);

    for h in &proposals.handles {
        match resolve_support(&h.support_span_ids, &allowed, page) {
            Ok(sup) if cited_contains(&sup, &allowed, &h.surface_text) => cues.handles.push(HandleAtom {
                id: next(AtomKind::Handle, cues.handles.len()),
                surface_text: h.surface_text.clone(),
                support_span_ids: sup,
            }),
            Ok(_) => rejected.push(rejection(page, provider, "InvalidAtom: handle surface_text is not a substring of a cited span", h)),
            Err(reason) => rejected.push(rejection(page, provider, reason, h)),
        }
    }
    for t in &proposals.times {
        let checked = resolve_support(&t.support_span_ids, &allowed, page).and_then(|sup| {
            if t.surface_text.trim().is_empty() {
                Err("InvalidAtom: empty time surface_text".to_string())
            } else if t.normalized.is_none() && t.relative_expression.as_deref().is_none_or(|r| r.trim().is_empty()) {
                Err("InvalidAtom: time has neither normalized interval nor relative expression".to_string())
            } else if t.normalized.is_some_and(|iv| iv.start > iv.end) {
                Err("InvalidAtom: inverted interval".to_string())
            } else {
                Ok(sup)
            }
        });
        match checked {
            Ok(sup) => cues.times.push(TimeAtom {
                id: next(AtomKind::Time, cues.times.len()),
                surface_text: t.surface_text.clone(),
                normalized: t.normalized,
                relative_expression: t.relative_expression.clone().filter(|r| !r.trim().is_empty()),
                support_span_ids: sup,
            }),
            Err(reason) => rejected.push(rejection(page, provider, reason, t)),
        }
    }
    for v in &proposals.pivots {
        let checked = resolve_support(std::slice::from_ref(&v.candidate_ref), &allowed, page).and_then(|sup| {
            if v.referent_label.trim().is_empty() {
                Err("InvalidAtom: empty referent_label".to_string())
            } else if !cited_contains(&sup, &allowed, &v.support_text) {
                Err("InvalidAtom: pivot support_text is not a substring of its candidate span".to_string())
            } else {
                Ok(sup)
            }
        });
        match checked {
            Ok(sup) => cues.pivots.push(PivotAtom {
                id: next(AtomKind::Pivot, cues.pivots.len()),
                referent_label: v.referent_label.clone(),
                support_span_ids: sup,
                support_text: v.support_text.clone(),
            }),
            Err(reason) => rejected.push(rejection(page, provider, reason, v)),
        }
    }
    (cues, rejected)
}

fn cue_support(cues: &PageCues) -> Vec<(AtomId, &[AtomId])> {
    cues.handles
        .iter()
        .map(|h| (h.id, h.support_span_ids.as_slice()))
        .chain(cues.times.iter().map(|t| (t.id, t.support_span_ids.as_slice())))
        .chain(cues.pivots.iter().map(|v| (v.id, v.support_span_ids.as_slice())))
        .collect()
}

/// Outcome of claim validation for one page.
#[derive(Debug, Default)]
pub struct ValidatedClaims {
    pub claims: Vec<ClaimAtom>,
    pub rejections: Vec<Rejection>,
    /// Valid claims dropped because the page budget was reached.
    pub truncated: usize,
}

/// Validates claim proposals: 1–3 distinct spans from the store, at least one
/// on this page; linked cues limited to this page's cues. Invalid links are
/// dropped (and reported) without rejecting the claim. Valid claims beyond
/// `budget` are truncated in proposal order.
pub fn validate_claims(
    page: AtomId,
    store: &MemoryStore,
    cues: &PageCues,
    proposals: &[ClaimProposal],
    budget: usize,
) -> ValidatedClaims {
    let provider = "claim_writer";
    let spans: HashMap<AtomId, &SpanAtom> = store.atoms_of(AtomKind::Span).filter_map(MemoryAtom::as_span).map(|s| (s.id, s)).collect();
    let page_cues = cue_support(cues);
    let mut out = ValidatedClaims::default();
    for p in proposals {
        let sup = match resolve_support(&p.support_span_ids, &spans, page) {
            Ok(s) => s,
            Err(reason) => {
                out.rejections.push(rejection(page, provider, reason, p));
                continue;
            }
        };
        let reason = if sup.len() > 3 {
            Some("SupportViolation: more than three support spans")
        } else if !sup.iter().any(|s| s.page == page.page) {
            Some("SupportViolation: no support span on the claim's own page")
        } else if p.unit_text.trim().is_empty() {
            Some("InvalidAtom: empty claim text")
        } else {
            None
        };
        if let Some(reason) = reason {
            out.rejections.push(rejection(page, provider, reason, p));
            continue;
        }
        let linked: Vec<AtomId> = match &p.linked_cue_ids {
            None => {
                let sup_set: BTreeSet<AtomId> = sup.iter().copied().collect();
                page_cues.iter().filter(|(_, s)| s.iter().any(|x| sup_set.contains(x))).map(|(id, _)| *id).collect()
            }
            Some(ids) => {
                let mut linked = Vec::new();
                for raw in ids {
                    match raw.parse::<AtomId>() {
                        Ok(id) if page_cues.iter().any(|(c, _)| *c == id) => {
                            if !linked.contains(&id) {
                                linked.push(id);
                            }
                        }
                        _ => out.rejections.push(rejection(
                            page,
                            provider,
                            format!("DanglingReference: linked cue {raw:?} is not a cue of {page}; link dropped"),
                            p,
                        )),
                    }
                }
                linked
            }
        };
        if out.claims.len() == budget {
            out.truncated += 1;
            continue;
        }
        out.claims.push(ClaimAtom {
            id: AtomId::new(AtomKind::Claim, page.page, out.claims.len() as u32),
            claim_text: p.unit_text.clone(),
            support_span_ids: sup,
            linked_cue_ids: linked,
        });
    }
    out
}
