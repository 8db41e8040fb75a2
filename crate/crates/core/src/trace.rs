//! Line-delimited query traces and a validator that re-derives the pipeline
//! invariants from a trace alone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::atom::{AtomId, AtomKind};
use crate::engine::{AblationFlags, EngineConfig, QueryResult};
use crate::projection::MemberHit;
use crate::retrieval::{FusedHit, RouteHit, RouteId};
use crate::utilization::{AnswerOutcome, Fallback, Role};

const SCORE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    pub per_route_k: usize,
    pub rrf_k: f64,
    pub pool_m: usize,
    pub rerank_keep_k: usize,
    pub select_budget_x: usize,
    pub ablation: AblationFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Query { query: String, variants: Vec<String>, settings: TraceSettings },
    RouteHit(RouteHit),
    Fused(FusedHit),
    Discarded { atom_id: AtomId, s_ret: f64 },
    Bundle { head: AtomId, projected: bool, rho: f64, closure: BTreeSet<AtomId>, member_hits: Vec<MemberHit> },
    /// One pool member: its ρ position, s_rank and position after reranking
    /// (`None` when cut by K).
    Scored { head: AtomId, pool_rank: usize, rank_score: f64, kept_rank: Option<usize> },
    Selection { head: AtomId, role: Role, rank_score: f64 },
    Rejection { stage: String, reason: String },
    Fallback(Fallback),
    Outcome {
        records: Vec<(AtomId, Role)>,
        sufficiency_flag: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer: Option<AnswerOutcome>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
}

pub fn trace_records(r: &QueryResult, config: &EngineConfig) -> Vec<TraceRecord> {
    let mut out = vec![TraceRecord::Query {
        query: r.query.clone(),
        variants: r.variants.clone(),
        settings: TraceSettings {
            per_route_k: config.retrieval.per_route_k,
            rrf_k: config.retrieval.rrf_k,
            pool_m: config.utilization.pool_m,
            rerank_keep_k: config.utilization.rerank_keep_k,
            select_budget_x: config.utilization.select_budget_x,
            ablation: config.ablation,
        },
    }];
    out.extend(r.per_route.values().flatten().cloned().map(TraceRecord::RouteHit));
    out.extend(r.fused.iter().cloned().map(TraceRecord::Fused));
    out.extend(r.discarded.iter().map(|h| TraceRecord::Discarded { atom_id: h.atom_id, s_ret: h.s_ret }));
    out.extend(r.bundles.iter().map(|b| TraceRecord::Bundle {
        head: b.head,
        projected: b.projected,
        rho: b.rho,
        closure: b.closure.clone(),
        member_hits: b.member_hits.clone(),
    }));
    let kept: HashMap<AtomId, usize> = r.rerank.kept.iter().enumerate().map(|(i, s)| (s.bundle.head, i + 1)).collect();
    out.extend(r.rerank.pool.iter().enumerate().map(|(i, s)| TraceRecord::Scored {
        head: s.bundle.head,
        pool_rank: i + 1,
        rank_score: s.rank_score,
        kept_rank: kept.get(&s.bundle.head).copied(),
    }));
    out.extend(r.rerank.fallback.iter().cloned().map(TraceRecord::Fallback));
    out.extend(r.selection.selected.iter().map(|s| TraceRecord::Selection { head: s.bundle.head, role: s.role, rank_score: s.rank_score }));
    out.extend(r.selection.rejections.iter().map(|reason| TraceRecord::Rejection { stage: "select".into(), reason: reason.clone() }));
    out.extend(r.selection.fallback.iter().cloned().map(TraceRecord::Fallback));
    let (answer, error) = match &r.outcome {
        Ok(a) => (Some(a.clone()), None),
        Err(e) => (None, Some(e.to_string())),
    };
    out.push(TraceRecord::Outcome {
        records: r.interface.records.iter().map(|f| (f.head, f.role)).collect(),
        sufficiency_flag: r.interface.sufficiency_flag,
        answer,
        error,
    });
    out
}

pub fn write_trace(records: &[TraceRecord], mut w: impl Write) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_trace(r: impl BufRead) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| TraceError::Malformed { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCORE_TOLERANCE
}

/// Checks one query's trace (or several concatenated, each starting with a
/// `query` record). Returns every violated invariant.
pub fn validate_trace(records: &[TraceRecord]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || matches!(records[i], TraceRecord::Query { .. }) {
            validate_one(&records[start..i], &mut problems);
            start = i;
        }
    }
    problems
}

fn validate_one(records: &[TraceRecord], problems: &mut Vec<String>) {
    let Some(TraceRecord::Query { query, settings, .. }) = records.first() else {
        problems.push("trace does not start with a query record".into());
        return;
    };
    let mut p = |m: String| problems.push(format!("{query:?}: {m}"));

    let mut routes: BTreeMap<RouteId, Vec<&RouteHit>> = BTreeMap::new();
    let mut fused = Vec::new();
    let mut bundles = Vec::new();
    let mut scored = Vec::new();
    let mut selections = Vec::new();
    let mut fallbacks = Vec::new();
    let mut outcome = None;
    for r in &records[1..] {
        match r {
            TraceRecord::RouteHit(h) => routes.entry(h.route).or_default().push(h),
            TraceRecord::Fused(f) => fused.push(f),
            TraceRecord::Bundle { head, projected, rho, closure, member_hits } => bundles.push((head, projected, rho, closure, member_hits)),
            TraceRecord::Scored { head, pool_rank, rank_score, kept_rank } => scored.push((head, pool_rank, rank_score, kept_rank)),
            TraceRecord::Selection { head, role, .. } => selections.push((head, role)),
            TraceRecord::Fallback(f) => fallbacks.push(f.stage.as_str()),
            TraceRecord::Outcome { records, sufficiency_flag, answer, .. } => outcome = Some((records, sufficiency_flag, answer)),
            _ => {}
        }
    }

    // Route lists: at most K, consecutive ranks, one entry per atom.
    let mut expected: BTreeMap<AtomId, f64> = BTreeMap::new();
    for (route, hits) in &routes {
        if hits.len() > settings.per_route_k {
            p(format!("{route} returned {} hits, over K = {}", hits.len(), settings.per_route_k));
        }
        let mut ranks: Vec<usize> = hits.iter().map(|h| h.rank).collect();
        ranks.sort_unstable();
        if ranks != (1..=hits.len()).collect::<Vec<_>>() {
            p(format!("{route} ranks are not 1..n"));
        }
        let atoms: BTreeSet<AtomId> = hits.iter().map(|h| h.atom_id).collect();
        if atoms.len() != hits.len() {
            p(format!("{route} lists an atom twice"));
        }
        if route.is_dense() && hits.iter().any(|h| !matches!(h.atom_id.kind, AtomKind::Claim | AtomKind::Span)) {
            p(format!("{route} returned a non-claim, non-span atom"));
        }
        for h in hits {
            *expected.entry(h.atom_id).or_default() += 1.0 / (settings.rrf_k + h.rank as f64);
        }
    }
    // Fusion: X_q is exactly the union of route lists, with RRF scores.
    let fused_ids: BTreeSet<AtomId> = fused.iter().map(|f| f.atom_id).collect();
    if fused_ids != expected.keys().copied().collect() {
        p("fused atoms differ from the union of route hits".into());
    }
    let fused_score: HashMap<AtomId, f64> = fused.iter().map(|f| (f.atom_id, f.s_ret)).collect();
    for f in &fused {
        if let Some(e) = expected.get(&f.atom_id) {
            if !close(*e, f.s_ret) {
                p(format!("s_ret of {} is {}, RRF gives {e}", f.atom_id, f.s_ret));
            }
        }
    }
    // Bundles: ρ is the member sum; members are fused hits inside the closure.
    for (head, projected, rho, closure, members) in &bundles {
        let sum: f64 = members.iter().map(|m| m.s_ret).sum();
        if !close(sum, **rho) {
            p(format!("ρ of {head} is {rho}, members sum to {sum}"));
        }
        for m in members.iter() {
            if !closure.contains(&m.atom_id) {
                p(format!("member {} of {head} is outside its closure", m.atom_id));
            }
            if fused_score.get(&m.atom_id).is_none_or(|s| !close(*s, m.s_ret)) {
                p(format!("member {} of {head} is not a fused hit with that score", m.atom_id));
            }
        }
        if **projected && head.kind != AtomKind::Claim {
            p(format!("projected bundle headed by non-claim {head}"));
        }
        if !**projected && settings.ablation.is_empty() {
            p(format!("unprojected bundle {head} without an ablation"));
        }
    }
    for w in bundles.windows(2) {
        let ((h1, _, r1, _, _), (h2, _, r2, _, _)) = (&w[0], &w[1]);
        if r1 < r2 || (r1 == r2 && h1 > h2) {
            p(format!("bundles {h1} and {h2} out of ρ order"));
        }
    }
    // Pool: exactly the ρ-top-M, in order.
    let top_m: Vec<AtomId> = bundles.iter().take(settings.pool_m).map(|b| *b.0).collect();
    let pool: Vec<AtomId> = scored.iter().map(|s| *s.0).collect();
    if pool != top_m {
        p("scored pool is not the ρ-top-M".into());
    }
    // Kept: at most K, the s_rank-top-K unless the scorer fell back.
    let mut kept: Vec<(usize, AtomId, f64)> = scored.iter().filter_map(|s| s.3.map(|k| (k, *s.0, *s.2))).collect();
    kept.sort_by_key(|k| k.0);
    if kept.len() > settings.rerank_keep_k {
        p(format!("{} bundles kept, over K = {}", kept.len(), settings.rerank_keep_k));
    }
    if !fallbacks.contains(&"rerank") {
        let min_kept = kept.iter().map(|k| k.2).fold(f64::INFINITY, f64::min);
        if scored.iter().any(|s| s.3.is_none() && *s.2 > min_kept) {
            p("a bundle outside the kept set outscores a kept one".into());
        }
        if kept.windows(2).any(|w| w[0].2 < w[1].2) {
            p("kept bundles are not in s_rank order".into());
        }
    }
    // Selection: a subset of the kept bundles, within budget.
    let kept_ids: BTreeSet<AtomId> = kept.iter().map(|k| k.1).collect();
    if selections.len() > settings.select_budget_x {
        p(format!("{} selections, over X = {}", selections.len(), settings.select_budget_x));
    }
    for (head, _) in &selections {
        if !kept_ids.contains(head) {
            p(format!("selected {head} was never offered to the selector"));
        }
    }
    match outcome {
        None => p("missing outcome record".into()),
        Some((records, sufficient, answer)) => {
            let sel: BTreeSet<(AtomId, Role)> = selections.iter().map(|(h, r)| (**h, **r)).collect();
            let rec: BTreeSet<(AtomId, Role)> = records.iter().copied().collect();
            if sel != rec {
                p("fact records differ from the selection".into());
            }
            let has_direct = records.iter().any(|(_, r)| *r == Role::Direct);
            if *sufficient != has_direct {
                p("sufficiency flag disagrees with the record roles".into());
            }
            if !has_direct && matches!(answer, Some(AnswerOutcome::Answer { .. })) {
                p("answer produced without a direct record".into());
            }
        }
    }
}
