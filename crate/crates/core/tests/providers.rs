mod common;

use std::collections::{BTreeMap, BTreeSet};

use memir::compiler::{paginate, segment_spans, validate_claims, validate_cues, CompileConfig};
use memir::providers::prompts::{default_variables, PromptAsset, PROMPT_NAMES};
use memir::providers::{
    cosine, BundleScorer, BundleSelector, ClaimWriter, CueExtractor, Embedder, HashingEmbedder, OverlapScorer, ProviderSet,
    RuleCueExtractor, SelectorCandidate, SentenceClaimWriter, ThresholdSelector,
};
use memir::store::{ConversationMeta, MemoryStore};
use memir::text::tokenize;
use memir::{AtomKind, ExecMode, MemoryAtom};

use common::*;

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[test]
fn reference_providers_are_deterministic() {
    let history = fixture_history();
    let layouts = paginate(&history, &CompileConfig::default()).unwrap();
    let (ce, cw) = (RuleCueExtractor::default(), SentenceClaimWriter::default());
    let mut base = MemoryStore::new(ConversationMeta::default());
    for l in &layouts {
        let spans = segment_spans(l);
        base.add_atom(l.page.clone()).unwrap();
        for s in &spans {
            base.add_atom(s.clone()).unwrap();
        }
        let a = ce.extract(&l.page, &spans).unwrap();
        assert_eq!(a, ce.extract(&l.page, &spans).unwrap());
        let (cues, rejected) = validate_cues(l.page.id, &spans, &a);
        assert!(rejected.is_empty(), "{rejected:?}");
        let claims = cw.write(&l.page, &spans, &cues, 12).unwrap();
        assert_eq!(claims, cw.write(&l.page, &spans, &cues, 12).unwrap());
        let v = validate_claims(l.page.id, &base, &cues, &claims, 12);
        assert!(v.rejections.is_empty(), "{:?}", v.rejections);
    }
}

#[test]
fn fixture_vocabulary_has_disjoint_buckets() {
    // Pairs of claims with no shared token whose tokens also land in
    // different buckets must be orthogonal.
    let store = fixture_store(ExecMode::Sequential);
    let emb = HashingEmbedder::default();
    let texts: Vec<&str> = store.claims().map(|c| c.claim_text.as_str()).collect();
    let buckets = |t: &str| -> BTreeSet<u64> { tokenize(t).iter().map(|w| fnv(w.as_bytes()) % 1024).collect() };
    let mut checked = 0;
    for (i, a) in texts.iter().enumerate() {
        for b in &texts[i + 1..] {
            let (ta, tb): (BTreeSet<String>, BTreeSet<String>) = (tokenize(a).into_iter().collect(), tokenize(b).into_iter().collect());
            if !ta.is_disjoint(&tb) || !buckets(a).is_disjoint(&buckets(b)) {
                continue;
            }
            let c = cosine(&emb.embed(a).unwrap(), &emb.embed(b).unwrap());
            assert_eq!(c, 0.0, "{a:?} vs {b:?}");
            checked += 1;
        }
    }
    assert!(checked > 10, "only {checked} disjoint pairs");
    let v = emb.embed("Nate adopted a puppy").unwrap();
    assert!((cosine(&v, &v) - 1.0).abs() < 1e-6);
    assert_eq!(cosine(&emb.embed("").unwrap(), &v), 0.0);
}

#[test]
fn prompts_render_by_plain_substitution() {
    let vars = default_variables(6);
    for name in PROMPT_NAMES {
        let p = PromptAsset::load(name).unwrap();
        for v in &p.variables {
            assert!(p.template_text.contains(&format!("{{{{{v}}}}}")));
        }
        let mut want = p.template_text.clone();
        for v in &p.variables {
            want = want.replace(&format!("{{{{{v}}}}}"), &vars[v]);
        }
        assert_eq!(p.render(&vars).unwrap(), want, "{name}");
    }
    assert!(PromptAsset::load("nope").is_err());
    let bad: BTreeMap<String, String> = BTreeMap::new();
    assert!(PromptAsset::load("bundle_selection").unwrap().render(&bad).is_err());
}

#[test]
fn overlap_and_threshold_rules() {
    let s = OverlapScorer::default();
    assert_eq!(s.score("kayak Silver Lake", "Nate paddled across Silver Lake in a kayak.").unwrap(), 1.0);
    let cands: Vec<SelectorCandidate> = [0.9, 0.6, 0.3]
        .iter()
        .enumerate()
        .map(|(i, sc)| SelectorCandidate { bundle_id: format!("C0:{i:02}"), rank: i + 1, score: *sc, text: String::new() })
        .collect();
    let out = ThresholdSelector::default().select("q", &cands, 2).unwrap();
    let roles: Vec<&str> = out.iter().map(|p| p.role.as_str()).collect();
    assert_eq!(roles, ["direct", "direct"]);
}

#[test]
fn extractive_answer_carries_first_time_cue() {
    let store = fixture_store(ExecMode::Sequential);
    let p = memir::harness::PipelineProfile::locomo_default();
    let e = memir::Engine::new(&store, ProviderSet::reference(1024), p.engine_config(ExecMode::Sequential)).unwrap();
    let r = e.query("When did Joanna visit Machu Picchu?").unwrap();
    let first = r.interface.records.iter().find(|f| f.role == memir::utilization::Role::Direct).unwrap();
    let cue = &first.temporal_cues[0].rendering;
    match r.outcome.unwrap() {
        memir::utilization::AnswerOutcome::Answer { text, cited } => {
            assert!(text.contains(cue.as_str()), "{text}");
            assert_eq!(cited, vec![1]);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(store.get(&first.head).map(MemoryAtom::kind), Some(AtomKind::Claim));
}
