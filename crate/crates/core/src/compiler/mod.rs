//! Compilation of an interaction history into a validated memory store:
//! pagination, sentence spans, cue extraction, claim writing and retrieval
//! views.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::atom::{MemoryAtom, SpanAtom};
use crate::exec::{map_slice, ExecMode};
use crate::providers::{ClaimWriter, CueExtractor, PageCues};
use crate::store::{ConversationMeta, MemoryStore, StoreError};

pub mod paginate;
pub mod report;
pub mod segment;
pub mod validate;
pub mod views;

pub use paginate::{paginate, PageLayout};
pub use report::{CompileReport, Rejection};
pub use segment::{segment_spans, split_sentences};
pub use validate::{validate_claims, validate_cues};
pub use views::build_views;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("interaction history has no turns")]
    EmptyHistory,
    #[error("invalid compile configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub session_key: String,
    pub speaker: String,
    pub text: String,
    #[serde(default)]
    pub timestamp: Option<NaiveDateTime>,
    #[serde(default)]
    pub image_caption: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionHistory {
    pub conversation_id: String,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PagePolicy {
    /// By session when any turn has a session key, else fixed windows.
    Auto,
    BySession,
    FixedWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceSplitter {
    /// Terminal punctuation plus newlines, with an abbreviation guard.
    Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileConfig {
    pub max_claims_per_page: usize,
    pub page_policy: PagePolicy,
    pub window_size: usize,
    pub sentence_splitter: SentenceSplitter,
}

impl Default for CompileConfig {
    fn default() -> Self {
        Self { max_claims_per_page: 12, page_policy: PagePolicy::Auto, window_size: 10, sentence_splitter: SentenceSplitter::Rule }
    }
}

impl CompileConfig {
    pub fn validate(&self) -> Result<(), CompileError> {
        if self.max_claims_per_page == 0 {
            return Err(CompileError::InvalidConfig("max_claims_per_page must be at least 1".into()));
        }
        if self.window_size == 0 {
            return Err(CompileError::InvalidConfig("window_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// The two compile-time providers.
#[derive(Clone, Copy)]
pub struct CompileProviders<'a> {
    pub cue_extractor: &'a dyn CueExtractor,
    pub claim_writer: &'a dyn ClaimWriter,
}

struct PageWork {
    cues: PageCues,
    claims: Vec<crate::atom::ClaimAtom>,
    rejections: Vec<Rejection>,
    failed: Vec<String>,
    truncated: usize,
}

fn failure_record(layout: &PageLayout, provider: &str, reason: String) -> Rejection {
    Rejection { page_id: layout.page.id, provider: provider.into(), reason: format!("ProviderFailure: {reason}"), payload_excerpt: String::new() }
}

fn compile_page(layout: &PageLayout, spans: &[SpanAtom], base: &MemoryStore, providers: CompileProviders<'_>, budget: usize) -> PageWork {
    let page = &layout.page;
    let mut work = PageWork { cues: PageCues::default(), claims: Vec::new(), rejections: Vec::new(), failed: Vec::new(), truncated: 0 };
    match providers.cue_extractor.extract(page, spans) {
        Ok(p) => {
            let (cues, rejected) = validate_cues(page.id, spans, &p);
            work.cues = cues;
            work.rejections.extend(rejected);
        }
        Err(e) => {
            work.failed.push(format!("cue_extractor: {e}"));
            work.rejections.push(failure_record(layout, "cue_extractor", e.to_string()));
        }
    }
    match providers.claim_writer.write(page, spans, &work.cues, budget) {
        Ok(p) => {
            let v = validate_claims(page.id, base, &work.cues, &p, budget);
            work.claims = v.claims;
            work.rejections.extend(v.rejections);
            work.truncated = v.truncated;
        }
        Err(e) => {
            work.failed.push(format!("claim_writer: {e}"));
            work.rejections.push(failure_record(layout, "claim_writer", e.to_string()));
        }
    }
    work
}

/// Φ: compiles a history into a store. Pages are processed independently
/// (concurrently under [`ExecMode::Parallel`]) and merged in page order, so
/// the output does not depend on the mode. Provider failures do not abort
/// compilation: the page keeps its spans and is flagged in the report.
pub fn compile(
    history: &InteractionHistory,
    providers: CompileProviders<'_>,
    config: &CompileConfig,
    mode: ExecMode,
) -> Result<(MemoryStore, CompileReport), CompileError> {
    config.validate()?;
    let layouts = paginate(history, config)?;
    let spans: Vec<Vec<SpanAtom>> = map_slice(mode, &layouts, segment_spans);

    let mut store = MemoryStore::new(ConversationMeta { conversation_id: history.conversation_id.clone(), ..Default::default() });
    for (layout, page_spans) in layouts.iter().zip(&spans) {
        store.add_atom(layout.page.clone())?;
        for s in page_spans {
            store.add_atom(s.clone())?;
        }
    }

    let base = &store;
    let work: Vec<PageWork> = map_slice(mode, &(0..layouts.len()).collect::<Vec<_>>(), |&i| {
        compile_page(&layouts[i], &spans[i], base, providers, config.max_claims_per_page)
    });

    let mut report = CompileReport { pages: layouts.len(), spans: spans.iter().map(Vec::len).sum(), ..Default::default() };
    for (layout, w) in layouts.iter().zip(work) {
        let page = layout.page.id;
        report.rejections.extend(w.rejections);
        if !w.failed.is_empty() {
            warn!(page = %page, failures = ?w.failed, "provider failure; page partially compiled");
            report.flagged_pages.push(page);
        }
        if w.truncated > 0 {
            debug!(page = %page, dropped = w.truncated, "claims truncated to page budget");
            report.truncated.push((page, w.truncated));
        }
        let cues = w.cues.handles.into_iter().map(MemoryAtom::from)
            .chain(w.cues.times.into_iter().map(MemoryAtom::from))
            .chain(w.cues.pivots.into_iter().map(MemoryAtom::from));
        for atom in cues.chain(w.claims.into_iter().map(MemoryAtom::from)) {
            let kind = atom.kind();
            // The store re-checks every atom; a failure here means the
            // validators above let something through.
            match store.add_atom(atom.clone()) {
                Ok(_) => {
                    if kind.is_cue() {
                        report.cues += 1;
                    } else {
                        report.claims += 1;
                    }
                }
                Err(e) => report.rejections.push(validate::rejection(page, if kind.is_cue() { "cue_extractor" } else { "claim_writer" }, e.to_string(), &atom)),
            }
        }
    }
    for v in build_views(&store) {
        store.add_view(v)?;
    }
    report.views = store.views().len();
    Ok((store, report))
}
