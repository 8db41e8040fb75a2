//! Grouping turns into pages.

use crate::atom::{AtomId, PageAtom};

use super::{CompileConfig, CompileError, InteractionHistory, PagePolicy, Turn};

/// A page together with where each turn body sits in its `raw_text`.
#[derive(Debug, Clone, PartialEq)]
pub struct PageLayout {
    pub page: PageAtom,
    /// `(global turn index, speaker, byte offset of the body, body)` per turn.
    pub turns: Vec<(usize, String, usize, String)>,
}

/// Turn text as stored on the page; an image caption follows an `[image]`
/// marker.
pub fn turn_body(t: &Turn) -> String {
    match t.image_caption.as_deref().map(str::trim).filter(|c| !c.is_empty()) {
        Some(c) if t.text.trim().is_empty() => format!("[image] {c}"),
        Some(c) => format!("{} [image] {c}", t.text),
        None => t.text.clone(),
    }
}

fn resolved_policy(history: &InteractionHistory, config: &CompileConfig) -> PagePolicy {
    match config.page_policy {
        PagePolicy::Auto if history.turns.iter().any(|t| !t.session_key.is_empty()) => PagePolicy::BySession,
        PagePolicy::Auto => PagePolicy::FixedWindow,
        p => p,
    }
}

/// Partitions the history into pages: contiguous runs of one session key
/// under by-session paging, or `window_size` consecutive turns otherwise.
/// Page text is one `{speaker}: {text}` line per turn.
pub fn paginate(history: &InteractionHistory, config: &CompileConfig) -> Result<Vec<PageLayout>, CompileError> {
    if history.turns.is_empty() {
        return Err(CompileError::EmptyHistory);
    }
    let mut groups: Vec<(usize, usize)> = Vec::new();
    match resolved_policy(history, config) {
        PagePolicy::BySession => {
            let mut start = 0;
            for i in 1..=history.turns.len() {
                if i == history.turns.len() || history.turns[i].session_key != history.turns[start].session_key {
                    groups.push((start, i));
                    start = i;
                }
            }
        }
        _ => {
            let n = config.window_size.max(1);
            let mut start = 0;
            while start < history.turns.len() {
                let end = (start + n).min(history.turns.len());
                groups.push((start, end));
                start = end;
            }
        }
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(p, (a, b))| {
            let mut raw = String::new();
            let mut turns = Vec::with_capacity(b - a);
            for (i, t) in history.turns[a..b].iter().enumerate() {
                if i > 0 {
                    raw.push('\n');
                }
                raw.push_str(&t.speaker);
                raw.push_str(": ");
                let body = turn_body(t);
                turns.push((a + i, t.speaker.clone(), raw.len(), body.clone()));
                raw.push_str(&body);
            }
            let page = PageAtom {
                id: AtomId::page_id(p as u32),
                session_key: history.turns[a].session_key.clone(),
                turn_range: (a, b - 1),
                raw_text: raw,
                timestamp_hint: history.turns[a..b].iter().find_map(|t| t.timestamp),
            };
            PageLayout { page, turns }
        })
        .collect())
}
