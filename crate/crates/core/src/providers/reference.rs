//! Rule-based stand-ins for the LLM cue extractor and claim writer.

use std::collections::HashSet;

use crate::atom::{PageAtom, SpanAtom};
use crate::temporal::{find_time_mentions, is_calendar_word, TimeMention};
use crate::text::{event_verbs, only_spaces_between, word_tokens, FunctionWordTable, Token};

use super::{
    ClaimProposal, ClaimWriter, CueExtractor, CueProposals, HandleProposal, PageCues,
    PivotProposal, ProviderError, TimeProposal,
};

/// Capitalized words that never start a handle.
const LEADING_STOP: &[&str] = &[
    "the", "a", "an", "my", "our", "your", "his", "her", "their", "this", "that", "these", "those",
    "we", "he", "she", "they", "it", "you", "hey", "hi", "hello", "oh", "wow", "yes", "no",
    "thanks", "so", "well", "ok", "okay", "and", "but", "or", "if", "when", "what", "where", "who",
    "why", "how", "did", "do", "does", "is", "are", "was", "were", "can", "could", "have", "has",
];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "my", "her", "his", "their", "our", "your", "its", "this", "that", "these",
    "those", "some", "another",
];

const AUXILIARIES: &[&str] = &[
    "was", "were", "is", "are", "be", "been", "being", "got", "get", "has", "have", "had", "just",
    "finally", "also", "already", "recently",
];

const FILLER: &[&str] = &[
    "haha", "hahaha", "lol", "wow", "nice", "cool", "great", "awesome", "thanks", "thank", "yeah",
    "yes", "yep", "ok", "okay", "oh", "hey", "hi", "hello", "bye", "sure", "really", "totally",
    "amazing", "omg", "hmm", "um", "uh", "good", "glad", "sounds", "agreed", "indeed", "wonderful",
];

const MAX_LABEL_TOKENS: usize = 4;

fn overlaps(t: &Token<'_>, times: &[TimeMention]) -> bool {
    times.iter().any(|m| t.start < m.end && m.start < t.end)
}

fn strip_possessive(s: &str) -> &str {
    s.strip_suffix("'s").or_else(|| s.strip_suffix("\u{2019}s")).unwrap_or(s)
}

/// Maximal runs of capitalized words, skipping calendar words, time
/// expressions and the pronoun "I". A run that is only the sentence-initial
/// word is not a handle.
pub fn capitalized_handles(text: &str, times: &[TimeMention]) -> Vec<String> {
    let toks = word_tokens(text);
    let usable = |i: usize| {
        let t = &toks[i];
        let lower = t.lower();
        t.is_capitalized()
            && !overlaps(t, times)
            && !is_calendar_word(t.text)
            && lower != "i"
            && !lower.starts_with("i'")
            && !lower.starts_with("i\u{2019}")
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if !usable(i) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < toks.len() && usable(j + 1) && only_spaces_between(text, toks[j].end, toks[j + 1].start) {
            j += 1;
        }
        let mut first = i;
        while first <= j && LEADING_STOP.contains(&toks[first].lower().as_str()) {
            first += 1;
        }
        let sentence_initial_only = first == 0 && j == 0;
        if first <= j && !sentence_initial_only {
            let surface = strip_possessive(&text[toks[first].start..toks[j].end]);
            if surface.chars().count() >= 2 {
                out.push(surface.to_string());
            }
        }
        i = j + 1;
    }
    out
}

/// Event-verb pivot: `(referent_label, support_text)` for the first event
/// verb of the sentence. The label is the noun phrase after the verb, or the
/// subject noun phrase before it when the verb has no object.
pub fn event_pivot(
    text: &str,
    times: &[TimeMention],
    verbs: &HashSet<String>,
    fw: &FunctionWordTable,
) -> Option<(String, String)> {
    let toks = word_tokens(text);
    let lower: Vec<String> = toks.iter().map(Token::lower).collect();
    let vi = lower.iter().position(|w| verbs.contains(w))?;
    let content = |k: usize| {
        !fw.contains(&lower[k])
            && !overlaps(&toks[k], times)
            && !is_calendar_word(toks[k].text)
            && !verbs.contains(&lower[k])
            && !FILLER.contains(&lower[k].as_str())
    };

    // Object noun phrase.
    let mut k = vi + 1;
    let mut prev_end = toks[vi].end;
    while k < toks.len() && DETERMINERS.contains(&lower[k].as_str()) && only_spaces_between(text, prev_end, toks[k].start) {
        prev_end = toks[k].end;
        k += 1;
    }
    let start = k;
    while k < toks.len()
        && k - start < MAX_LABEL_TOKENS
        && content(k)
        && only_spaces_between(text, prev_end, toks[k].start)
    {
        prev_end = toks[k].end;
        k += 1;
    }
    if k > start {
        let label = strip_possessive(&text[toks[start].start..toks[k - 1].end]);
        let support = &text[toks[vi].start..toks[k - 1].end];
        return Some((label.to_string(), support.to_string()));
    }

    // Subject noun phrase.
    let mut end = vi;
    while end > 0 && AUXILIARIES.contains(&lower[end - 1].as_str()) {
        end -= 1;
    }
    let mut first = end;
    while first > 0
        && end - (first - 1) <= MAX_LABEL_TOKENS
        && content(first - 1)
        && only_spaces_between(text, toks[first - 1].end, toks[first].start)
    {
        first -= 1;
    }
    if first < end {
        let label = &text[toks[first].start..toks[end - 1].end];
        let support = &text[toks[first].start..toks[vi].end];
        return Some((label.to_string(), support.to_string()));
    }
    None
}

/// Reference cue extractor: date/weekday/relative-time patterns for times,
/// capitalized word runs for handles, event verbs for pivots. Every cue cites
/// the span it was read from and is an exact substring of it.
#[derive(Debug, Clone)]
pub struct RuleCueExtractor {
    verbs: HashSet<String>,
    function_words: FunctionWordTable,
}

impl Default for RuleCueExtractor {
    fn default() -> Self {
        Self { verbs: event_verbs(), function_words: FunctionWordTable::default() }
    }
}

impl CueExtractor for RuleCueExtractor {
    fn extract(&self, page: &PageAtom, spans: &[SpanAtom]) -> Result<CueProposals, ProviderError> {
        let anchor = page.timestamp_hint.map(|t| t.date());
        let mut out = CueProposals::default();
        let mut pivot_labels = HashSet::new();
        for span in spans {
            let text = &span.verbatim_text;
            let sid = span.id.to_string();
            let times = find_time_mentions(text, anchor);
            for m in &times {
                let rel = m.relative_expression();
                match out
                    .times
                    .iter_mut()
                    .find(|t| t.surface_text == m.surface && t.normalized == m.normalized)
                {
                    Some(t) => {
                        if !t.support_span_ids.contains(&sid) {
                            t.support_span_ids.push(sid.clone());
                        }
                    }
                    None => out.times.push(TimeProposal {
                        surface_text: m.surface.clone(),
                        normalized: m.normalized,
                        relative_expression: rel,
                        support_span_ids: vec![sid.clone()],
                    }),
                }
            }
            for h in capitalized_handles(text, &times) {
                match out.handles.iter_mut().find(|p| p.surface_text == h) {
                    Some(p) => {
                        if !p.support_span_ids.contains(&sid) {
                            p.support_span_ids.push(sid.clone());
                        }
                    }
                    None => out.handles.push(HandleProposal { surface_text: h, support_span_ids: vec![sid.clone()] }),
                }
            }
            if let Some((label, support)) = event_pivot(text, &times, &self.verbs, &self.function_words) {
                if pivot_labels.insert(label.to_lowercase()) {
                    out.pivots.push(PivotProposal {
                        candidate_ref: sid.clone(),
                        support_text: support,
                        referent_label: label,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// True when a sentence carries at least two content words that are not
/// conversational filler.
pub fn is_content_sentence(text: &str, fw: &FunctionWordTable) -> bool {
    fw.content_words(text)
        .iter()
        .filter(|w| !FILLER.contains(&w.as_str()))
        .count()
        >= 2
}

/// Rewrites a sentence-initial first-person pronoun to the speaker's name;
/// sentences without one are prefixed with `{speaker}: `.
pub fn resolve_speaker(speaker: &str, sentence: &str) -> String {
    let toks = word_tokens(sentence);
    if let Some(first) = toks.first().filter(|t| t.start == 0) {
        let rest = &sentence[first.end..];
        let lower = first.lower().replace('\u{2019}', "'");
        let replaced = match lower.as_str() {
            "i" => Some(match rest.strip_prefix(" am ") {
                Some(tail) => format!("{speaker} is {tail}"),
                None => format!("{speaker}{rest}"),
            }),
            "i'm" => Some(format!("{speaker} is{rest}")),
            "i've" => Some(format!("{speaker} has{rest}")),
            "i'll" => Some(format!("{speaker} will{rest}")),
            "i'd" => Some(format!("{speaker} would{rest}")),
            "my" => Some(format!("{speaker}'s{rest}")),
            _ => None,
        };
        if let Some(r) = replaced {
            return r;
        }
    }
    format!("{speaker}: {sentence}")
}

/// Reference claim writer: one claim per pivot-bearing sentence, then one per
/// remaining content sentence, each in page order, up to the budget. Each
/// claim cites its sentence's span and links the cues read from that span.
#[derive(Debug, Clone, Default)]
pub struct SentenceClaimWriter {
    function_words: FunctionWordTable,
}

impl ClaimWriter for SentenceClaimWriter {
    fn write(
        &self,
        _page: &PageAtom,
        spans: &[SpanAtom],
        cues: &PageCues,
        budget: usize,
    ) -> Result<Vec<ClaimProposal>, ProviderError> {
        let pivot_spans: HashSet<_> = cues.pivots.iter().flat_map(|p| p.support_span_ids.iter().copied()).collect();
        let (pivoted, rest): (Vec<&SpanAtom>, Vec<&SpanAtom>) =
            spans.iter().partition(|s| pivot_spans.contains(&s.id));
        let ordered = pivoted
            .into_iter()
            .chain(rest.into_iter().filter(|s| is_content_sentence(&s.verbatim_text, &self.function_words)));
        let claims = ordered
            .take(budget)
            .map(|s| {
                let mut linked: Vec<String> = Vec::new();
                let on_span = |sup: &[crate::atom::AtomId]| sup.contains(&s.id);
                linked.extend(cues.handles.iter().filter(|h| on_span(&h.support_span_ids)).map(|h| h.id.to_string()));
                linked.extend(cues.times.iter().filter(|t| on_span(&t.support_span_ids)).map(|t| t.id.to_string()));
                linked.extend(cues.pivots.iter().filter(|v| on_span(&v.support_span_ids)).map(|v| v.id.to_string()));
                ClaimProposal {
                    unit_text: resolve_speaker(&s.speaker, &s.verbatim_text),
                    support_span_ids: vec![s.id.to_string()],
                    linked_cue_ids: Some(linked),
                }
            })
            .collect();
        Ok(claims)
    }
}

/// Template claim writer: `On {page date}, {speaker} stated: {sentence}` for
/// every span of the page, up to the budget.
#[derive(Debug, Clone, Default)]
pub struct TemplateClaimWriter;

impl ClaimWriter for TemplateClaimWriter {
    fn write(
        &self,
        page: &PageAtom,
        spans: &[SpanAtom],
        _cues: &PageCues,
        budget: usize,
    ) -> Result<Vec<ClaimProposal>, ProviderError> {
        let date = page
            .timestamp_hint
            .map(|t| t.format("%Y-%m-%d").to_string())
            .unwrap_or_else(|| "an unknown date".to_string());
        Ok(spans
            .iter()
            .take(budget)
            .map(|s| ClaimProposal {
                unit_text: format!("On {date}, {} stated: {}", s.speaker, s.verbatim_text),
                support_span_ids: vec![s.id.to_string()],
                linked_cue_ids: None,
            })
            .collect())
    }
}
