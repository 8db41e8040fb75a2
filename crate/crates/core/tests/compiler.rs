mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use serde::Deserialize;

use memir::compiler::{compile, build_views, CompileConfig, CompileError, CompileProviders, InteractionHistory, PagePolicy, Turn};
use memir::harness::PipelineProfile;
use memir::providers::{AlwaysFail, RuleCueExtractor, SentenceClaimWriter, TemplateClaimWriter};
use memir::{AtomKind, ExecMode, MemoryAtom};

use common::*;

#[derive(Deserialize)]
struct Golden {
    atom_counts: std::collections::BTreeMap<String, usize>,
    claims: Vec<GoldenClaim>,
}

#[derive(Deserialize)]
struct GoldenClaim {
    id: String,
    claim_text: String,
}

fn golden() -> Golden {
    serde_json::from_str(&std::fs::read_to_string(fixture("dialogue.golden.json")).unwrap()).unwrap()
}

fn turn(session: &str, speaker: &str, text: &str) -> Turn {
    Turn { session_key: session.into(), speaker: speaker.into(), text: text.into(), timestamp: None, image_caption: None }
}

fn reference() -> (RuleCueExtractor, SentenceClaimWriter) {
    (RuleCueExtractor::default(), SentenceClaimWriter::default())
}

#[test]
fn fixture_matches_golden_counts() {
    let store = fixture_store(ExecMode::Sequential);
    let g = golden();
    for kind in [AtomKind::Page, AtomKind::Span, AtomKind::Handle, AtomKind::Time, AtomKind::Pivot, AtomKind::Claim] {
        assert_eq!(store.count(kind), g.atom_counts[kind.name()], "{}", kind.name());
    }
}

#[test]
fn fixture_claim_texts_match_golden() {
    let store = fixture_store(ExecMode::Sequential);
    let got: Vec<(String, String)> = store.claims().map(|c| (c.id.to_string(), c.claim_text.clone())).collect();
    let want: Vec<(String, String)> = golden().claims.into_iter().map(|c| (c.id, c.claim_text)).collect();
    assert_eq!(got, want);
}

#[test]
fn fixture_store_shape() {
    let history = fixture_history();
    let (store, report) = compile_with(&history, &PipelineProfile::locomo_default(), ExecMode::Parallel);
    assert!(store.check_invariants().is_empty());
    assert_eq!(store.count(AtomKind::Page), 3);
    assert!(report.rejections.is_empty());
    for p in 0..3 {
        assert!(store.claims().any(|c| c.id.page == p), "page {p} has no claim");
    }
    // Every sentence of every turn is covered by some span.
    let spans: BTreeSet<&str> = store.atoms_of(AtomKind::Span).map(MemoryAtom::text).collect();
    for t in &history.turns {
        for s in t.text.split_inclusive(['.', '!', '?']).map(str::trim).filter(|s| !s.is_empty()) {
            assert!(spans.contains(s), "no span for {s:?}");
        }
    }
}

#[test]
fn parallel_and_sequential_compile_agree() {
    let h = fixture_history();
    let p = PipelineProfile::locomo_default();
    let a = compile_with(&h, &p, ExecMode::Sequential);
    let b = compile_with(&h, &p, ExecMode::Parallel);
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn seven_sentences_seven_spans() {
    let texts = ["I got the job. Starting Monday.", "Nice! When?", "Monday.", "See you. Bye now."];
    let turns: Vec<Turn> = texts.iter().enumerate().map(|(i, t)| turn("s1", if i % 2 == 0 { "A" } else { "B" }, t)).collect();
    let history = InteractionHistory { conversation_id: "c".into(), turns };
    let (ce, cw) = reference();
    let (store, _) = compile(&history, CompileProviders { cue_extractor: &ce, claim_writer: &cw }, &CompileConfig::default(), ExecMode::Sequential).unwrap();
    // Independent naive splitter: count terminal punctuation runs.
    let naive: usize = texts.iter().map(|t| t.split(['.', '!', '?']).filter(|s| !s.trim().is_empty()).count()).sum();
    assert_eq!(naive, 7);
    assert_eq!(store.count(AtomKind::Span), naive);
    let joined: Vec<&str> = store.atoms_of(AtomKind::Span).map(MemoryAtom::text).collect();
    assert_eq!(joined.join(" "), texts.join(" "));
}

#[test]
fn template_writer_on_three_span_page() {
    let mut t = turn("s1", "Ann", "We sold a vase. The kayak is red. Bo moved away.");
    t.timestamp = chrono::NaiveDate::from_ymd_opt(2023, 5, 8).and_then(|d| d.and_hms_opt(13, 56, 0));
    let history = InteractionHistory { conversation_id: "c".into(), turns: vec![t] };
    let ce = RuleCueExtractor::default();
    let cp = CompileProviders { cue_extractor: &ce, claim_writer: &TemplateClaimWriter };
    let (store, report) = compile(&history, cp, &CompileConfig::default(), ExecMode::Sequential).unwrap();
    assert!(report.rejections.is_empty());
    let spans: Vec<_> = store.atoms_of(AtomKind::Span).map(|a| (a.id(), a.text().to_string())).collect();
    let claims: Vec<_> = store.claims().collect();
    assert_eq!(claims.len(), 3);
    for (c, (sid, text)) in claims.iter().zip(&spans) {
        assert_eq!(c.claim_text, format!("On 2023-05-08, Ann stated: {text}"));
        assert_eq!(c.support_span_ids, vec![*sid]);
    }
}

#[test]
fn failing_providers_leave_pages_and_spans() {
    let history = fixture_history();
    let cp = CompileProviders { cue_extractor: &AlwaysFail, claim_writer: &AlwaysFail };
    let (store, report) = compile(&history, cp, &CompileConfig::default(), ExecMode::Parallel).unwrap();
    assert!(store.atoms().all(|a| matches!(a.kind(), AtomKind::Page | AtomKind::Span)));
    assert_eq!(report.flagged_pages.len(), 3);
    assert!(report.has_provider_failure());
}

#[test]
fn empty_history_is_an_error() {
    let (ce, cw) = reference();
    let history = InteractionHistory { conversation_id: "c".into(), turns: vec![] };
    let err = compile(&history, CompileProviders { cue_extractor: &ce, claim_writer: &cw }, &CompileConfig::default(), ExecMode::Sequential).unwrap_err();
    assert!(matches!(err, CompileError::EmptyHistory));
}

#[test]
fn fixed_window_pages() {
    let turns: Vec<Turn> = (0..25).map(|i| turn("", "A", &format!("Line {i}."))).collect();
    let history = InteractionHistory { conversation_id: "c".into(), turns };
    let (ce, cw) = reference();
    let cfg = CompileConfig { page_policy: PagePolicy::FixedWindow, window_size: 10, ..CompileConfig::default() };
    let (store, _) = compile(&history, CompileProviders { cue_extractor: &ce, claim_writer: &cw }, &cfg, ExecMode::Sequential).unwrap();
    let ranges: Vec<_> = store.atoms_of(AtomKind::Page).filter_map(|a| a.as_page()).map(|p| p.turn_range).collect();
    assert_eq!(ranges, vec![(0, 9), (10, 19), (20, 24)]);
}

#[test]
fn view_targets_match_membership_scan() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let store = random_store(&mut rng, 60);
        for v in build_views(&store) {
            let owner = v.owner_atom_id;
            let want: Vec<_> = if owner.kind == AtomKind::Claim {
                vec![owner]
            } else {
                store
                    .claims()
                    .filter(|c| c.support_span_ids.contains(&owner) || c.linked_cue_ids.contains(&owner))
                    .map(|c| c.id)
                    .collect()
            };
            assert_eq!(v.target_claim_ids, want, "{}", v.view_id);
        }
    }
}

const VOCAB: &[&str] = &[
    "I", "we", "my", "Ann", "Cafe", "Roma", "met", "bought", "visited", "the", "a", "kayak", "on", "12", "May", "2023", "last",
    "week", "yesterday", "Machu", "Picchu", "haha", "nice", "first", "vase", "at", "in", "April",
];

fn arb_sentence() -> impl Strategy<Value = String> {
    (prop::collection::vec(prop::sample::select(VOCAB), 1..9), prop::sample::select(vec![".", "!", "?", ""]))
        .prop_map(|(w, end)| format!("{}{end}", w.join(" ")))
}

fn arb_history() -> impl Strategy<Value = InteractionHistory> {
    prop::collection::vec((0..3usize, prop::collection::vec(arb_sentence(), 1..4)), 1..12).prop_map(|turns| {
        let mut session = 0;
        let turns = turns
            .into_iter()
            .enumerate()
            .map(|(i, (bump, s))| {
                session += usize::from(bump == 0);
                turn(&format!("session_{session}"), if i % 2 == 0 { "Ann" } else { "Bo" }, &s.join(" "))
            })
            .collect();
        InteractionHistory { conversation_id: "p".into(), turns }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reference_providers_never_rejected(history in arb_history()) {
        let (ce, cw) = reference();
        let (store, report) = compile(&history, CompileProviders { cue_extractor: &ce, claim_writer: &cw }, &CompileConfig::default(), ExecMode::Sequential).unwrap();
        prop_assert!(report.rejections.is_empty(), "{:?}", report.rejections);
        prop_assert!(store.check_invariants().is_empty());
    }

    #[test]
    fn page_turn_ranges_partition_turns(history in arb_history()) {
        let (ce, cw) = reference();
        let (store, _) = compile(&history, CompileProviders { cue_extractor: &ce, claim_writer: &cw }, &CompileConfig::default(), ExecMode::Sequential).unwrap();
        let mut next = 0;
        for p in store.atoms_of(AtomKind::Page).filter_map(|a| a.as_page()) {
            prop_assert_eq!(p.turn_range.0, next);
            next = p.turn_range.1 + 1;
        }
        prop_assert_eq!(next, history.turns.len());
    }
}
