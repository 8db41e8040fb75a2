//! Selector call and validation of its output.

use std::collections::HashSet;

use crate::providers::{call_with_limit, BundleSelector, SelectorCandidate};

use super::{Fallback, Role, ScoredBundle, SelectedBundle, UtilizationConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub selected: Vec<SelectedBundle>,
    /// Human-readable reasons for each rejected selector entry.
    pub rejections: Vec<String>,
    pub fallback: Option<Fallback>,
}

pub fn candidates(reranked: &[ScoredBundle]) -> Vec<SelectorCandidate> {
    reranked
        .iter()
        .enumerate()
        .map(|(i, s)| SelectorCandidate {
            bundle_id: s.bundle.head.to_string(),
            rank: i + 1,
            score: s.rank_score,
            text: s.serialized.clone(),
        })
        .collect()
}

/// Asks the selector for at most `select_budget_x` bundles. Unknown ids,
/// roles outside {direct, support}, repeats and entries past the budget are
/// rejected; a failed call falls back to the top X, all direct.
pub fn select_bundles(
    reranked: &[ScoredBundle],
    query: &str,
    selector: &dyn BundleSelector,
    config: &UtilizationConfig,
) -> SelectionOutcome {
    let x = config.select_budget_x;
    if reranked.is_empty() {
        return SelectionOutcome { selected: Vec::new(), rejections: Vec::new(), fallback: None };
    }
    let cands = candidates(reranked);
    let proposals = match call_with_limit(config.provider_timeout, || selector.select(query, &cands, x)) {
        Ok(p) => p,
        Err(e) => {
            let selected = reranked
                .iter()
                .take(x)
                .map(|s| SelectedBundle { bundle: s.bundle.clone(), role: Role::Direct, rank_score: s.rank_score })
                .collect();
            return SelectionOutcome {
                selected,
                rejections: Vec::new(),
                fallback: Some(Fallback { stage: "select".into(), reason: e.to_string() }),
            };
        }
    };
    let mut selected = Vec::new();
    let mut rejections = Vec::new();
    let mut seen = HashSet::new();
    for p in proposals {
        let Some(pos) = cands.iter().position(|c| c.bundle_id == p.bundle_id) else {
            rejections.push(format!("{}: not among the offered bundles", p.bundle_id));
            continue;
        };
        let role = match p.role.parse::<Role>() {
            Ok(r) => r,
            Err(e) => {
                rejections.push(format!("{}: {e}", p.bundle_id));
                continue;
            }
        };
        if !seen.insert(pos) {
            rejections.push(format!("{}: selected twice", p.bundle_id));
            continue;
        }
        if selected.len() == x {
            rejections.push(format!("{}: over the selection budget of {x}", p.bundle_id));
            continue;
        }
        let s = &reranked[pos];
        selected.push(SelectedBundle { bundle: s.bundle.clone(), role, rank_score: s.rank_score });
    }
    SelectionOutcome { selected, rejections, fallback: None }
}
