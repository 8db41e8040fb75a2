//! Shared fixtures, random generators and brute-force oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;

use memir::atom::{ClaimAtom, HandleAtom, PageAtom, PivotAtom, SpanAtom, TimeAtom};
use memir::compiler::{compile, CompileProviders, CompileReport, InteractionHistory};
use memir::harness::{load_jsonl_corpus, load_queries, EvalQuery, PipelineProfile};
use memir::providers::ProviderSet;
use memir::retrieval::{FusedHit, RouteHit, RouteId};
use memir::store::ConversationMeta;
use memir::temporal::DateInterval;
use memir::{AtomId, AtomKind, ExecMode, MemoryAtom, MemoryStore};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_history() -> InteractionHistory {
    let f = File::open(fixture("dialogue.jsonl")).unwrap();
    load_jsonl_corpus(BufReader::new(f), "dialogue").unwrap()
}

pub fn fixture_queries() -> Vec<EvalQuery> {
    load_queries(BufReader::new(File::open(fixture("queries.jsonl")).unwrap())).unwrap()
}

pub fn compile_with(history: &InteractionHistory, profile: &PipelineProfile, mode: ExecMode) -> (MemoryStore, CompileReport) {
    let p = ProviderSet::reference(profile.retrieval.dense_dim);
    let cp = CompileProviders { cue_extractor: p.cue_extractor.as_ref(), claim_writer: p.claim_writer.as_ref() };
    compile(history, cp, &profile.compile, mode).unwrap()
}

pub fn fixture_store(mode: ExecMode) -> MemoryStore {
    compile_with(&fixture_history(), &PipelineProfile::locomo_default(), mode).0
}

const WORDS: &[&str] = &[
    "kayak", "lake", "river", "vase", "market", "tea", "cafe", "roma", "puppy", "screenplay", "festival", "book",
    "club", "library", "theater", "brother", "sister", "moved", "bought", "sold", "visited", "the", "a", "at",
];

fn sentence(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(2..7);
    let mut w: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let first = w[0].to_string();
    let cap = first[..1].to_uppercase() + &first[1..];
    w[0] = "";
    format!("{cap}{}.", w.join(" "))
}

/// A valid store with up to `max_atoms` atoms: pages of spans, cues on their
/// own page, claims citing one to three spans (at least one on their page)
/// and linking random cues.
pub fn random_store(rng: &mut impl Rng, max_atoms: usize) -> MemoryStore {
    let mut st = MemoryStore::new(ConversationMeta::default());
    let pages = rng.gen_range(1..=5u32);
    let budget = max_atoms / pages as usize;
    let mut all_spans: Vec<AtomId> = Vec::new();
    let mut all_cues: Vec<AtomId> = Vec::new();
    for p in 0..pages {
        let n_spans = rng.gen_range(1..=(budget / 4).clamp(1, 12));
        let sentences: Vec<String> = (0..n_spans).map(|_| sentence(rng)).collect();
        let raw = sentences.join(" ");
        let pid = AtomId::page_id(p);
        st.add_atom(PageAtom { id: pid, session_key: format!("s{p}"), turn_range: (p as usize, p as usize), raw_text: raw, timestamp_hint: None })
            .unwrap();
        let mut at = 0;
        let mut spans = Vec::new();
        for s in &sentences {
            let id = st.next_id(AtomKind::Span, p);
            st.add_atom(SpanAtom { id, page_id: pid, speaker: "A".into(), turn_index: p as usize, char_range: (at, at + s.len()), verbatim_text: s.clone() })
                .unwrap();
            at += s.len() + 1;
            spans.push((id, s.clone()));
        }
        let remaining = budget.saturating_sub(1 + n_spans);
        let n_cues = rng.gen_range(0..=remaining / 2);
        for _ in 0..n_cues {
            let (sid, text) = spans.choose(rng).unwrap().clone();
            let word = text.trim_end_matches('.').split(' ').next().unwrap().to_string();
            let id = match rng.gen_range(0..3) {
                0 => st.add_atom(HandleAtom { id: st.next_id(AtomKind::Handle, p), surface_text: word, support_span_ids: vec![sid] }),
                1 => st.add_atom(TimeAtom {
                    id: st.next_id(AtomKind::Time, p),
                    surface_text: word,
                    normalized: Some(DateInterval::day(NaiveDate::from_ymd_opt(2023, 5, 1 + rng.gen_range(0..28)).unwrap())),
                    relative_expression: None,
                    support_span_ids: vec![sid],
                }),
                _ => st.add_atom(PivotAtom { id: st.next_id(AtomKind::Pivot, p), referent_label: word.clone(), support_span_ids: vec![sid], support_text: word }),
            };
            all_cues.push(id.unwrap());
        }
        all_spans.extend(spans.iter().map(|(id, _)| *id));
        let n_claims = remaining - n_cues;
        for _ in 0..n_claims {
            let own = spans.choose(rng).unwrap().0;
            let mut support = vec![own];
            for _ in 0..rng.gen_range(0..3) {
                let s = *all_spans.choose(rng).unwrap();
                if !support.contains(&s) {
                    support.push(s);
                }
            }
            let mut links: Vec<AtomId> = Vec::new();
            if !all_cues.is_empty() {
                for _ in 0..rng.gen_range(0..4) {
                    let c = *all_cues.choose(rng).unwrap();
                    if !links.contains(&c) {
                        links.push(c);
                    }
                }
            }
            st.add_atom(ClaimAtom { id: st.next_id(AtomKind::Claim, p), claim_text: sentence(rng), support_span_ids: support, linked_cue_ids: links })
                .unwrap();
        }
    }
    st
}

/// Distinct random atoms of `store` with random positive scores.
pub fn random_hits(rng: &mut impl Rng, store: &MemoryStore, max: usize) -> Vec<FusedHit> {
    let ids: Vec<AtomId> = store.atoms().map(MemoryAtom::id).collect();
    let n = rng.gen_range(0..=max.min(ids.len()));
    ids.choose_multiple(rng, n)
        .map(|id| FusedHit { atom_id: *id, s_ret: rng.gen_range(0.001..0.1), contributing_routes: BTreeMap::new() })
        .collect()
}

/// Brute-force bundle: (member atom ids, ρ, closure) per claim head.
pub type OracleBundle = (BTreeSet<AtomId>, f64, BTreeSet<AtomId>);

pub fn oracle_bundles(store: &MemoryStore, hits: &[FusedHit]) -> (BTreeMap<AtomId, OracleBundle>, BTreeSet<AtomId>) {
    let mut out: BTreeMap<AtomId, OracleBundle> = BTreeMap::new();
    let mut discarded = BTreeSet::new();
    for h in hits {
        let mut any = false;
        for c in store.claims() {
            let omega: BTreeSet<AtomId> = c.support_span_ids.iter().chain(&c.linked_cue_ids).copied().collect();
            if h.atom_id == c.id || omega.contains(&h.atom_id) {
                any = true;
                let e = out.entry(c.id).or_insert_with(|| (BTreeSet::new(), 0.0, omega.clone()));
                e.0.insert(h.atom_id);
                e.1 += h.s_ret;
                e.2.insert(h.atom_id);
            }
        }
        if !any {
            discarded.insert(h.atom_id);
        }
    }
    (out, discarded)
}

/// Random per-route rankings over `atoms` atoms: each route ranks a random
/// subset with contiguous ranks from 1.
pub fn random_route_lists(rng: &mut impl Rng, max_routes: usize, max_atoms: usize) -> BTreeMap<RouteId, Vec<RouteHit>> {
    let n_atoms = rng.gen_range(1..=max_atoms) as u32;
    let pool: Vec<AtomId> = (0..n_atoms).map(|i| AtomId::new(AtomKind::Claim, i / 10, i % 10)).collect();
    let mut routes = RouteId::ALL.to_vec();
    routes.shuffle(rng);
    routes.truncate(rng.gen_range(1..=max_routes));
    routes
        .into_iter()
        .map(|route| {
            let n = rng.gen_range(0..=pool.len());
            let hits = pool
                .choose_multiple(rng, n)
                .enumerate()
                .map(|(i, id)| RouteHit { route, atom_id: *id, view_id: None, rank: i + 1, raw_score: (n - i) as f64 })
                .collect();
            (route, hits)
        })
        .collect()
}

/// Σ_d 1/(k + rank_d(x)) by direct evaluation.
pub fn rrf_oracle(lists: &BTreeMap<RouteId, Vec<RouteHit>>, k: f64) -> BTreeMap<AtomId, f64> {
    let mut out = BTreeMap::new();
    for hits in lists.values() {
        for h in hits {
            *out.entry(h.atom_id).or_insert(0.0) += 1.0 / (k + h.rank as f64);
        }
    }
    out
}
