//! Fact interface construction, rendering and answer composition.

use crate::atom::{AtomKind, MemoryAtom};
use crate::providers::{call_with_limit, AnswerComposer};
use crate::store::MemoryStore;

use super::serialize::{evidence, temporal_cues};
use super::{AnswerOutcome, FactInterface, FactRecord, Role, SelectedBundle, UtilizationError};

/// One record per selection, direct records first, then by s_rank. With
/// `with_closure` false the records carry only their head (no evidence, no
/// time cues) unless the head is itself a span.
pub fn build_fact_interface(
    selected: &[SelectedBundle],
    query: &str,
    store: &MemoryStore,
    with_closure: bool,
) -> FactInterface {
    let mut records: Vec<FactRecord> = selected
        .iter()
        .map(|s| {
            let b = &s.bundle;
            let text = store.get(&b.head).map(MemoryAtom::text).unwrap_or_default().to_string();
            let (provenance, evidence, temporal_cues) = if with_closure {
                (b.closure.iter().copied().collect(), evidence(b, store), temporal_cues(b, store))
            } else {
                let mut flat = b.clone();
                flat.closure = [b.head].into_iter().collect();
                let ev = if b.head.kind == AtomKind::Span { evidence(&flat, store) } else { Vec::new() };
                (vec![b.head], ev, Vec::new())
            };
            FactRecord { head: b.head, claim_text: text, provenance, evidence, temporal_cues, role: s.role, rank_score: s.rank_score }
        })
        .collect();
    records.sort_by(|a, b| (a.role != Role::Direct).cmp(&(b.role != Role::Direct)).then(b.rank_score.total_cmp(&a.rank_score)));
    let sufficiency_flag = records.iter().any(|r| r.role == Role::Direct);
    FactInterface { query: query.to_string(), records, sufficiency_flag }
}

/// The exact text handed to answer composers:
///
/// ```text
/// QUERY: {q}
/// FACT[{i}] ({role}) {claim_text}
/// TIME: {cue; cue | none}
/// EVIDENCE: {p<page>:t<turn>} "{excerpt}"
/// ```
///
/// with `i` counting from 1 and one EVIDENCE line per span in provenance.
pub fn render_interface(f: &FactInterface) -> String {
    let mut out = format!("QUERY: {}\n", f.query);
    for (i, r) in f.records.iter().enumerate() {
        out.push_str(&format!("FACT[{}] ({}) {}\n", i + 1, r.role, r.claim_text));
        let times: Vec<&str> = r.temporal_cues.iter().map(|t| t.rendering.as_str()).collect();
        out.push_str(&format!("TIME: {}\n", if times.is_empty() { "none".to_string() } else { times.join("; ") }));
        for e in &r.evidence {
            out.push_str(&format!("EVIDENCE: {} \"{}\"\n", e.locator, e.excerpt));
        }
    }
    out
}

/// An interface without a direct record never reaches the composer.
pub fn compose_answer(
    f: &FactInterface,
    composer: &dyn AnswerComposer,
    timeout: Option<std::time::Duration>,
) -> Result<AnswerOutcome, UtilizationError> {
    if f.records.is_empty() || !f.sufficiency_flag {
        return Ok(AnswerOutcome::InsufficientEvidence);
    }
    let rendered = render_interface(f);
    call_with_limit(timeout, || composer.compose(&f.query, f, &rendered)).map_err(UtilizationError::ComposerFailure)
}
