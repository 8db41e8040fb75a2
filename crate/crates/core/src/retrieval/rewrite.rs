//! Query rewriting for the sparse routes.

use crate::temporal::find_time_mentions;
use crate::text::{tokenize, FunctionWordTable};

/// Q(q): `[original, lowercased, function-word-stripped, temporal-normalized]`
/// with duplicates removed, original first.
pub fn rewrite_query(q: &str, table: &FunctionWordTable) -> Vec<String> {
    let lowered = q.to_lowercase();
    let stripped = tokenize(q)
        .into_iter()
        .filter(|t| !table.contains(t))
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = vec![q.to_string()];
    for v in [lowered, stripped, temporal_normalized(q)] {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Replaces every dated time expression with its interval rendering, the same
/// form used in time_key views.
pub fn temporal_normalized(q: &str) -> String {
    let mut out = String::with_capacity(q.len());
    let mut at = 0;
    for m in find_time_mentions(q, None) {
        if let Some(iv) = m.normalized {
            out.push_str(&q[at..m.start]);
            out.push_str(&iv.to_string());
            at = m.end;
        }
    }
    out.push_str(&q[at..]);
    out
}
