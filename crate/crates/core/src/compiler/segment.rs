//! Rule-based sentence splitting into span atoms.

use crate::atom::{AtomId, AtomKind, SpanAtom};

use super::paginate::PageLayout;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "vs", "etc", "e.g", "i.e", "approx", "no", "mt",
];

fn is_abbreviation(text: &str, dot: usize) -> bool {
    let word_start = text[..dot]
        .rfind(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .map_or(0, |i| i + 1);
    let word = text[word_start..dot].to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Byte ranges of the sentences of `text`, trimmed of surrounding
/// whitespace. A sentence ends at a run of `.`, `?` or `!` (plus closing
/// quotes or brackets) followed by whitespace or the end of the text, unless
/// the period closes a known abbreviation; newlines always end a sentence.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut cuts = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        if c == '\n' {
            cuts.push((start, at));
            start = at + 1;
        } else if matches!(c, '.' | '?' | '!') {
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '?' | '!') {
                j += 1;
            }
            while j + 1 < chars.len() && matches!(chars[j + 1].1, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
                j += 1;
            }
            let end = chars.get(j + 1).map_or(text.len(), |&(b, _)| b);
            let at_boundary = chars.get(j + 1).is_none_or(|&(_, n)| n.is_whitespace());
            let abbrev = c == '.' && j == i && is_abbreviation(text, at);
            if at_boundary && !abbrev {
                cuts.push((start, end));
                start = end;
            }
            i = j;
        }
        i += 1;
    }
    cuts.push((start, text.len()));
    cuts.into_iter()
        .filter_map(|(a, b)| {
            let piece = &text[a..b];
            let lead = piece.len() - piece.trim_start().len();
            let trimmed = piece.trim();
            (!trimmed.is_empty()).then(|| (a + lead, a + lead + trimmed.len()))
        })
        .collect()
}

/// Sentence-level spans of every turn of a page, in text order.
pub fn segment_spans(layout: &PageLayout) -> Vec<SpanAtom> {
    let page = &layout.page;
    let mut out = Vec::new();
    for (turn_index, speaker, offset, body) in &layout.turns {
        for (a, b) in split_sentences(body) {
            let range = (offset + a, offset + b);
            out.push(SpanAtom {
                id: AtomId::new(AtomKind::Span, page.id.page, out.len() as u32),
                page_id: page.id,
                speaker: speaker.clone(),
                turn_index: *turn_index,
                char_range: range,
                verbatim_text: page.raw_text[range.0..range.1].to_string(),
            });
        }
    }
    out
}
