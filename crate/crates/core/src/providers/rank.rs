//! Reference scorer, selector and answer composer.

use crate::text::FunctionWordTable;
use crate::utilization::{AnswerOutcome, FactInterface, Role};

use super::{AnswerComposer, BundleScorer, BundleSelector, ProviderError, SelectionProposal, SelectorCandidate};

/// Fraction of the query's content words that occur in the bundle text.
#[derive(Debug, Clone, Default)]
pub struct OverlapScorer {
    function_words: FunctionWordTable,
}

impl BundleScorer for OverlapScorer {
    fn score(&self, query: &str, serialized: &str) -> Result<f64, ProviderError> {
        let q = self.function_words.content_words(query);
        if q.is_empty() {
            return Ok(0.0);
        }
        let s = self.function_words.content_words(serialized);
        Ok(q.intersection(&s).count() as f64 / q.len() as f64)
    }
}

/// Greedy top-X in reranked order. Scores at or above `direct_threshold`
/// are direct, other positive scores support; zero scores are not selected.
#[derive(Debug, Clone)]
pub struct ThresholdSelector {
    pub direct_threshold: f64,
}

impl Default for ThresholdSelector {
    fn default() -> Self {
        Self { direct_threshold: 0.5 }
    }
}

impl BundleSelector for ThresholdSelector {
    fn select(&self, _query: &str, candidates: &[SelectorCandidate], budget: usize) -> Result<Vec<SelectionProposal>, ProviderError> {
        let mut ordered: Vec<&SelectorCandidate> = candidates.iter().collect();
        ordered.sort_by_key(|c| c.rank);
        Ok(ordered
            .into_iter()
            .filter(|c| c.score > 0.0)
            .take(budget)
            .map(|c| SelectionProposal {
                bundle_id: c.bundle_id.clone(),
                role: if c.score >= self.direct_threshold { Role::Direct } else { Role::Support }.to_string(),
            })
            .collect())
    }
}

const WHEN_MARKERS: &[&str] = &["when", "what time", "what date", "what day", "which day", "which date", "what year", "which year", "what month", "which month"];

pub fn is_when_question(q: &str) -> bool {
    let q = q.to_lowercase();
    let words: Vec<&str> = q.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    let joined = format!(" {} ", words.join(" "));
    WHEN_MARKERS.iter().any(|m| joined.contains(&format!(" {m} ")))
}

/// Answers with the top direct record's claim text, plus its first time cue
/// for when-questions.
#[derive(Debug, Clone, Default)]
pub struct ExtractiveComposer;

impl AnswerComposer for ExtractiveComposer {
    fn compose(&self, query: &str, f: &FactInterface, _rendered: &str) -> Result<AnswerOutcome, ProviderError> {
        let Some((i, r)) = f.records.iter().enumerate().find(|(_, r)| r.role == Role::Direct) else {
            return Ok(AnswerOutcome::InsufficientEvidence);
        };
        let mut text = r.claim_text.clone();
        if is_when_question(query) {
            if let Some(t) = r.temporal_cues.first() {
                text = format!("{text} ({})", t.rendering);
            }
        }
        Ok(AnswerOutcome::Answer { text, cited: vec![i + 1] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::AtomId;
    use crate::utilization::{FactRecord, TemporalCue};

    fn cand(id: &str, rank: usize, score: f64) -> SelectorCandidate {
        SelectorCandidate { bundle_id: id.into(), rank, score, text: String::new() }
    }

    #[test]
    fn overlap_scores() {
        let s = OverlapScorer::default();
        assert_eq!(s.score("When did Joanna finish the screenplay?", "Joanna finished her screenplay").unwrap(), 2.0 / 3.0);
        assert_eq!(s.score("Joanna screenplay", "the screenplay by Joanna, yes").unwrap(), 1.0);
        assert_eq!(s.score("what is it?", "anything").unwrap(), 0.0);
    }

    #[test]
    fn threshold_roles() {
        let sel = ThresholdSelector::default();
        let got = sel.select("q", &[cand("a", 1, 0.9), cand("b", 2, 0.6), cand("c", 3, 0.3)], 2).unwrap();
        let roles: Vec<_> = got.iter().map(|p| p.role.as_str()).collect();
        assert_eq!(roles, vec!["direct", "direct"]);
        let got = sel.select("q", &[cand("a", 1, 0.9), cand("c", 2, 0.3), cand("z", 3, 0.0)], 6).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].role, "support");
    }

    fn record(role: Role, text: &str, times: &[&str]) -> FactRecord {
        FactRecord {
            head: "C0:00".parse::<AtomId>().unwrap(),
            claim_text: text.into(),
            provenance: vec![],
            evidence: vec![],
            temporal_cues: times
                .iter()
                .map(|t| TemporalCue { time_id: "T0:00".parse().unwrap(), rendering: t.to_string() })
                .collect(),
            role,
            rank_score: 1.0,
        }
    }

    #[test]
    fn composer_rules() {
        let c = ExtractiveComposer;
        let f = FactInterface {
            query: "When did Joanna finish the screenplay?".into(),
            records: vec![record(Role::Direct, "Joanna finished her first screenplay last month.", &["last month [2023-04-01..2023-04-30]"])],
            sufficiency_flag: true,
        };
        assert_eq!(
            c.compose(&f.query, &f, "").unwrap(),
            AnswerOutcome::Answer {
                text: "Joanna finished her first screenplay last month. (last month [2023-04-01..2023-04-30])".into(),
                cited: vec![1]
            }
        );
        let support_only = FactInterface { records: vec![record(Role::Support, "x", &[])], sufficiency_flag: false, ..f };
        assert_eq!(c.compose("q", &support_only, "").unwrap(), AnswerOutcome::InsufficientEvidence);
    }

    #[test]
    fn when_detection() {
        assert!(is_when_question("When did it happen?"));
        assert!(is_when_question("What time is the meeting"));
        assert!(!is_when_question("Whenever is fine"));
        assert!(!is_when_question("Where is it?"));
    }
}
