mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use memir::engine::{AblationFlags, EngineConfig};
use memir::harness::PipelineProfile;
use memir::projection::{build_bundles, CandidateBundle};
use memir::providers::{AlwaysFail, BundleScorer, BundleSelector, ProviderError, ProviderSet, SelectionProposal, SelectorCandidate};
use memir::trace::{trace_records, validate_trace};
use memir::utilization::{
    build_fact_interface, compose_answer, rerank_pool, select_bundles, AnswerOutcome, Role, SelectedBundle, UtilizationConfig,
};
use memir::{AtomId, AtomKind, Engine, ExecMode, MemoryAtom, MemoryStore};

use common::*;

struct Constant;

impl BundleScorer for Constant {
    fn score(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
        Ok(0.5)
    }
}

#[derive(Default)]
struct Counting(AtomicUsize);

impl BundleScorer for Counting {
    fn score(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
        self.0.fetch_add(1, Ordering::Relaxed);
        Ok(1.0)
    }
}

struct Fixed(Vec<SelectionProposal>);

impl BundleSelector for Fixed {
    fn select(&self, _: &str, _: &[SelectorCandidate], _: usize) -> Result<Vec<SelectionProposal>, ProviderError> {
        Ok(self.0.clone())
    }
}

fn engine(store: &MemoryStore, ablation: AblationFlags) -> Engine {
    let p = PipelineProfile::locomo_default().with_ablation(ablation);
    Engine::new(store, ProviderSet::reference(p.retrieval.dense_dim), p.engine_config(ExecMode::Parallel)).unwrap()
}

fn random_bundles(seed: u64, atoms: usize) -> (MemoryStore, Vec<CandidateBundle>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let store = random_store(&mut rng, atoms);
    let hits = random_hits(&mut rng, &store, atoms);
    let bundles = build_bundles(&hits, &store).unwrap().bundles;
    (store, bundles)
}

#[test]
fn fixture_traces_satisfy_invariants() {
    let store = fixture_store(ExecMode::Parallel);
    let mut variants = vec![AblationFlags::none()];
    variants.extend(AblationFlags::NAMES.iter().map(|n| AblationFlags::single(n).unwrap()));
    for flags in variants {
        let e = engine(&store, flags);
        for q in fixture_queries() {
            let r = e.query(&q.question).unwrap();
            let problems = validate_trace(&trace_records(&r, e.config()));
            assert!(problems.is_empty(), "{:?} {}: {problems:?}", flags.active(), q.id);
        }
    }
}

#[test]
fn gold_claims_come_back_direct() {
    let store = fixture_store(ExecMode::Parallel);
    let e = engine(&store, AblationFlags::none());
    for q in fixture_queries().into_iter().filter(|q| !q.gold_claim_ids.is_empty()) {
        let r = e.query(&q.question).unwrap();
        for g in &q.gold_claim_ids {
            let rec = r.interface.records.iter().find(|f| f.head == *g).unwrap_or_else(|| panic!("{}: {g} not selected", q.id));
            assert_eq!(rec.role, Role::Direct, "{}", q.id);
        }
        assert!(matches!(r.outcome, Ok(AnswerOutcome::Answer { .. })), "{}", q.id);
    }
}

#[test]
fn records_are_provenance_scoped() {
    let store = fixture_store(ExecMode::Parallel);
    let e = engine(&store, AblationFlags::none());
    for q in fixture_queries() {
        let r = e.query(&q.question).unwrap();
        let f = &r.interface;
        assert!(f.records.len() <= 6);
        assert_eq!(f.sufficiency_flag, f.records.iter().any(|x| x.role == Role::Direct));
        let firsts: Vec<bool> = f.records.iter().map(|x| x.role == Role::Direct).collect();
        assert!(firsts.windows(2).all(|w| w[0] >= w[1]), "direct records first");
        for rec in &f.records {
            assert!(rec.provenance.iter().all(|id| store.contains(id)));
            for ev in &rec.evidence {
                let span = store.get(&ev.span_id).and_then(MemoryAtom::as_span).unwrap();
                assert_eq!(ev.excerpt.as_bytes(), span.verbatim_text.as_bytes());
            }
            let want: Vec<AtomId> = rec.provenance.iter().filter(|id| id.kind == AtomKind::Time).copied().collect();
            let got: BTreeSet<AtomId> = rec.temporal_cues.iter().map(|t| t.time_id).collect();
            assert_eq!(got, want.into_iter().collect());
        }
    }
}

#[test]
fn updated_meeting_claim_carries_its_time() {
    let store = fixture_store(ExecMode::Parallel);
    let e = engine(&store, AblationFlags::none());
    let r = e.query("What time was the team meeting moved to?").unwrap();
    let rec = r.interface.records.iter().find(|f| f.claim_text.contains("team meeting")).expect("meeting claim selected");
    assert_eq!(rec.role, Role::Direct);
    assert!(rec.temporal_cues.iter().any(|t| t.rendering == "4 PM"), "{:?}", rec.temporal_cues);
    assert!(rec.evidence.iter().any(|ev| ev.excerpt.contains("moved to 4 PM")));
}

#[test]
fn pool_caps_scorer_calls() {
    let (store, bundles) = random_bundles(9, 200);
    assert!(bundles.len() > 32, "fixture needs more than M bundles, got {}", bundles.len());
    let scorer = Counting::default();
    let out = rerank_pool(&bundles, "q", &scorer, &store, &UtilizationConfig::default(), ExecMode::Parallel);
    assert_eq!(scorer.0.load(Ordering::Relaxed), 32);
    let pooled: Vec<AtomId> = out.pool.iter().map(|s| s.bundle.head).collect();
    let top: Vec<AtomId> = bundles.iter().take(32).map(|b| b.head).collect();
    assert_eq!(pooled, top);
}

#[test]
fn failing_scorer_falls_back_to_rho() {
    let (store, bundles) = random_bundles(4, 120);
    let out = rerank_pool(&bundles, "q", &AlwaysFail, &store, &UtilizationConfig::default(), ExecMode::Sequential);
    assert!(out.fallback.is_some());
    for (k, b) in out.kept.iter().zip(&bundles) {
        assert_eq!(k.bundle.head, b.head);
        assert_eq!(k.rank_score, b.rho);
    }
}

#[test]
fn selector_output_is_validated() {
    let (store, bundles) = random_bundles(9, 200);
    let cfg = UtilizationConfig::default();
    let kept = rerank_pool(&bundles, "q", &Constant, &store, &cfg, ExecMode::Sequential).kept;
    let mut props: Vec<SelectionProposal> =
        kept.iter().take(8).map(|s| SelectionProposal { bundle_id: s.bundle.head.to_string(), role: "direct".into() }).collect();
    props.insert(1, SelectionProposal { bundle_id: "C99:99".into(), role: "direct".into() });
    props.insert(2, SelectionProposal { bundle_id: kept[0].bundle.head.to_string(), role: "support".into() });
    props.insert(3, SelectionProposal { bundle_id: kept[9].bundle.head.to_string(), role: "maybe".into() });
    let out = select_bundles(&kept, "q", &Fixed(props), &cfg);
    let heads: Vec<AtomId> = out.selected.iter().map(|s| s.bundle.head).collect();
    let want: Vec<AtomId> = kept.iter().take(6).map(|s| s.bundle.head).collect();
    assert_eq!(heads, want);
    assert_eq!(out.rejections.len(), 5, "{:?}", out.rejections);
}

#[test]
fn time_cues_sorted_by_start() {
    let store = fixture_store(ExecMode::Sequential);
    // C0:00 links "last week"; add the other page-0 times to its closure.
    let mut bundle = build_bundles(
        &[memir::retrieval::FusedHit { atom_id: "C0:00".parse().unwrap(), s_ret: 0.1, contributing_routes: BTreeMap::new() }],
        &store,
    )
    .unwrap()
    .bundles
    .remove(0);
    bundle.closure.insert("T0:02".parse().unwrap());
    bundle.closure.insert("T0:01".parse().unwrap());
    let f = build_fact_interface(&[SelectedBundle { bundle, role: Role::Direct, rank_score: 1.0 }], "q", &store, true);
    let mut want: Vec<(chrono::NaiveDate, AtomId)> = f.records[0]
        .provenance
        .iter()
        .filter_map(|id| store.get(id).and_then(MemoryAtom::as_time))
        .map(|t| (t.normalized.unwrap().start, t.id))
        .collect();
    want.sort();
    let got: Vec<AtomId> = f.records[0].temporal_cues.iter().map(|t| t.time_id).collect();
    assert_eq!(got, want.into_iter().map(|(_, id)| id).collect::<Vec<_>>());
    assert_eq!(got.len(), 3);
}

#[test]
fn composer_contract() {
    let store = fixture_store(ExecMode::Sequential);
    let empty = build_fact_interface(&[], "q", &store, true);
    assert!(!empty.sufficiency_flag);
    assert_eq!(compose_answer(&empty, &AlwaysFail, None).unwrap(), AnswerOutcome::InsufficientEvidence);
    let e = engine(&store, AblationFlags::none());
    let r = e.query("When did Nate move to Queen Anne?").unwrap();
    assert!(compose_answer(&r.interface, &AlwaysFail, None).is_err());
    let support_only: Vec<SelectedBundle> =
        r.selection.selected.iter().map(|s| SelectedBundle { role: Role::Support, ..s.clone() }).collect();
    let f = build_fact_interface(&support_only, "q", &store, true);
    assert_eq!(compose_answer(&f, &AlwaysFail, None).unwrap(), AnswerOutcome::InsufficientEvidence);
}

#[test]
fn adversarial_queries_abstain() {
    let store = fixture_store(ExecMode::Parallel);
    let e = engine(&store, AblationFlags::none());
    for q in fixture_queries().into_iter().filter(|q| q.category == "adversarial") {
        let r = e.query(&q.question).unwrap();
        assert_eq!(r.outcome.unwrap(), AnswerOutcome::InsufficientEvidence, "{}", q.id);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constant_scorer_keeps_rho_order(seed in any::<u64>()) {
        let (store, bundles) = random_bundles(seed, 120);
        let out = rerank_pool(&bundles, "q", &Constant, &store, &UtilizationConfig::default(), ExecMode::Parallel);
        let got: Vec<AtomId> = out.kept.iter().map(|s| s.bundle.head).collect();
        let want: Vec<AtomId> = bundles.iter().take(32).map(|b| b.head).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn kept_is_sorted_and_bounded(seed in any::<u64>(), m in 1usize..40, k in 1usize..40) {
        let (store, bundles) = random_bundles(seed, 120);
        let cfg = UtilizationConfig { pool_m: m.max(k), rerank_keep_k: k, ..UtilizationConfig::default() };
        let out = rerank_pool(&bundles, "kayak lake vase", &memir::providers::OverlapScorer::default(), &store, &cfg, ExecMode::Sequential);
        prop_assert!(out.pool.len() <= cfg.pool_m);
        prop_assert!(out.kept.len() <= k);
        for w in out.kept.windows(2) {
            prop_assert!(w[0].rank_score >= w[1].rank_score);
        }
    }
}

#[test]
fn engine_config_round_trips_through_profile() {
    let p = PipelineProfile::beam_default();
    let cfg: EngineConfig = p.engine_config(ExecMode::Sequential);
    assert_eq!(cfg.utilization.pool_m, 72);
    assert_eq!(cfg.utilization.rerank_keep_k, 72);
    assert_eq!(cfg.utilization.select_budget_x, 10);
}
