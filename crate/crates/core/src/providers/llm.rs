//! Adapters that turn a text-completion client into providers, using the
//! shipped prompt templates and JSON output shapes. No client ships with the
//! crate; anything implementing [`Completion`] can be plugged in.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::atom::{PageAtom, SpanAtom};
use crate::temporal::find_time_mentions;

use super::prompts::{default_variables, PromptAsset};
use super::{
    ClaimProposal, ClaimWriter, CueExtractor, CueProposals, HandleProposal, PageCues, PivotProposal,
    ProviderError, SelectionProposal, SelectorCandidate, BundleSelector, TimeProposal,
};

/// A text-completion backend: instructions plus a JSON payload in, raw
/// model text out.
pub trait Completion: Send + Sync {
    fn complete(&self, instructions: &str, payload: &Value) -> Result<String, ProviderError>;
}

/// Parses a JSON object from model output, tolerating a surrounding code
/// fence or prose.
pub fn parse_json_object<T: for<'de> Deserialize<'de>>(raw: &str) -> Result<T, ProviderError> {
    let start = raw.find('{');
    let end = raw.rfind('}');
    let body = match (start, end) {
        (Some(s), Some(e)) if s < e => &raw[s..=e],
        _ => return Err(ProviderError::Malformed("no JSON object in output".into())),
    };
    serde_json::from_str(body).map_err(|e| ProviderError::Malformed(e.to_string()))
}

fn span_cards(spans: &[SpanAtom]) -> Vec<Value> {
    spans
        .iter()
        .map(|s| json!({"span_id": s.id.to_string(), "speaker": s.speaker, "text": s.verbatim_text}))
        .collect()
}

#[derive(Deserialize)]
struct Handles {
    #[serde(default)]
    handles: Vec<HandleProposal>,
}

#[derive(Deserialize)]
struct Pivots {
    #[serde(default)]
    pivots: Vec<PivotProposal>,
}

#[derive(Deserialize)]
struct Units {
    #[serde(default)]
    units: Vec<ClaimProposal>,
}

#[derive(Deserialize)]
struct Selected {
    #[serde(default)]
    selected: Vec<SelectionProposal>,
}

fn render(name: &str, vars: &BTreeMap<String, String>) -> Result<String, ProviderError> {
    PromptAsset::load(name)
        .and_then(|p| p.render(vars))
        .map_err(|e| ProviderError::Failed(e.to_string()))
}

/// Handles and pivots from the model; times from the deterministic date
/// patterns, since no time prompt exists.
pub struct LlmCueExtractor<C> {
    pub client: C,
    pub variables: BTreeMap<String, String>,
}

impl<C: Completion> LlmCueExtractor<C> {
    pub fn new(client: C) -> Self {
        Self { client, variables: default_variables(6) }
    }
}

impl<C: Completion> CueExtractor for LlmCueExtractor<C> {
    fn extract(&self, page: &PageAtom, spans: &[SpanAtom]) -> Result<CueProposals, ProviderError> {
        let payload = json!({"page_id": page.id.to_string(), "spans": span_cards(spans)});
        let handles: Handles = parse_json_object(&self.client.complete(&render("handle_extraction", &self.variables)?, &payload)?)?;
        let candidates = json!({"page_id": page.id.to_string(), "candidates": span_cards(spans)});
        let pivots: Pivots = parse_json_object(&self.client.complete(&render("pivot_extraction", &self.variables)?, &candidates)?)?;
        let anchor = page.timestamp_hint.map(|t| t.date());
        let times = spans
            .iter()
            .flat_map(|s| {
                find_time_mentions(&s.verbatim_text, anchor).into_iter().map(|m| TimeProposal {
                    relative_expression: m.relative_expression(),
                    surface_text: m.surface,
                    normalized: m.normalized,
                    support_span_ids: vec![s.id.to_string()],
                })
            })
            .collect();
        Ok(CueProposals { handles: handles.handles, times, pivots: pivots.pivots })
    }
}

pub struct LlmClaimWriter<C> {
    pub client: C,
}

impl<C: Completion> ClaimWriter for LlmClaimWriter<C> {
    fn write(&self, page: &PageAtom, spans: &[SpanAtom], cues: &PageCues, budget: usize) -> Result<Vec<ClaimProposal>, ProviderError> {
        let cue_cards: Vec<Value> = cues
            .handles
            .iter()
            .map(|h| json!({"cue_id": h.id.to_string(), "kind": "handle", "text": h.surface_text}))
            .chain(cues.times.iter().map(|t| json!({"cue_id": t.id.to_string(), "kind": "time", "text": t.rendering()})))
            .chain(cues.pivots.iter().map(|v| json!({"cue_id": v.id.to_string(), "kind": "pivot", "text": v.referent_label})))
            .collect();
        let payload = json!({
            "page": {"page_id": page.id.to_string(), "max_claim_units": budget, "session": page.session_key},
            "starter_ids": spans.iter().map(|s| s.id.to_string()).collect::<Vec<_>>(),
            "ordered_turn_cards": span_cards(spans),
            // The writer contract sees one page; neighbouring pages are not available here.
            "boundary_context": [],
            "cues": cue_cards,
        });
        let units: Units = parse_json_object(&self.client.complete(&render("claim_writing", &BTreeMap::new())?, &payload)?)?;
        Ok(units.units)
    }
}

pub struct LlmSelector<C> {
    pub client: C,
}

impl<C: Completion> BundleSelector for LlmSelector<C> {
    fn select(&self, query: &str, candidates: &[SelectorCandidate], budget: usize) -> Result<Vec<SelectionProposal>, ProviderError> {
        let payload = json!({"question": query, "bundles": candidates});
        let out: Selected = parse_json_object(&self.client.complete(&render("bundle_selection", &default_variables(budget))?, &payload)?)?;
        Ok(out.selected)
    }
}
