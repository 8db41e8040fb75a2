//! Desk-scale evaluation: claim-level recall of the retrieval and selection
//! stages, fact-interface size and abstention, for the full pipeline and its
//! ablations.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::engine::{AblationFlags, Engine, EngineError};
use crate::exec::{map_slice, ExecMode};
use crate::providers::ProviderSet;
use crate::store::MemoryStore;
use crate::trace::{trace_records, TraceRecord};

use super::corpus::CorpusError;
use super::profile::PipelineProfile;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("query {query}: gold id {id} is not a claim in the store")]
    UnresolvedGoldId { query: String, id: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub id: String,
    pub question: String,
    /// Empty for questions the store cannot answer.
    #[serde(default)]
    pub gold_claim_ids: Vec<AtomId>,
    #[serde(default)]
    pub category: String,
}

pub fn load_queries(reader: impl BufRead) -> Result<Vec<EvalQuery>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CorpusError::Parse { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub variant: String,
    pub query_id: String,
    pub category: String,
    pub gold: Vec<AtomId>,
    pub gold_in_bundles: Vec<AtomId>,
    pub gold_selected: Vec<AtomId>,
    pub fact_records: usize,
    pub insufficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMetrics {
    pub variant: String,
    pub queries: usize,
    pub labeled: usize,
    pub recall_at_bundles: f64,
    pub recall_at_selection: f64,
    pub mean_fact_records: f64,
    /// Share of unanswerable queries that ended in insufficient evidence.
    pub abstain_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub metrics: Vec<VariantMetrics>,
    pub records: Vec<QueryRecord>,
    pub traces: Vec<TraceRecord>,
}

/// The full pipeline followed by each single-flag ablation.
pub fn standard_variants() -> Vec<(String, AblationFlags)> {
    let mut v = vec![("full".to_string(), AblationFlags::none())];
    v.extend(AblationFlags::NAMES.iter().map(|n| (n.to_string(), AblationFlags::single(n).expect("known flag"))));
    v
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn recall(found: &[AtomId], gold: &[AtomId]) -> f64 {
    found.len() as f64 / gold.len() as f64
}

/// Runs every query under every variant. Queries of one variant run through
/// `mode`; records are sorted by query id within each variant.
pub fn evaluate(
    store: &MemoryStore,
    queries: &[EvalQuery],
    profile: &PipelineProfile,
    variants: &[(String, AblationFlags)],
    providers: impl Fn() -> ProviderSet,
    mode: ExecMode,
) -> Result<EvalReport, EvalError> {
    for q in queries {
        for g in &q.gold_claim_ids {
            if store.get(g).and_then(|a| a.as_claim()).is_none() {
                return Err(EvalError::UnresolvedGoldId { query: q.id.clone(), id: g.to_string() });
            }
        }
    }
    let mut sorted: Vec<&EvalQuery> = queries.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut report = EvalReport::default();
    for (name, flags) in variants {
        let cfg = profile.with_ablation(*flags).engine_config(mode);
        let engine = Engine::new(store, providers(), cfg.clone())?;
        let results = map_slice(mode, &sorted, |q| engine.query(&q.question));
        let mut records = Vec::with_capacity(sorted.len());
        for (q, r) in sorted.iter().zip(results) {
            let r = r?;
            let heads: BTreeSet<AtomId> = r.bundles.iter().map(|b| b.head).collect();
            let selected: BTreeSet<AtomId> = r.interface.records.iter().map(|f| f.head).collect();
            records.push(QueryRecord {
                variant: name.clone(),
                query_id: q.id.clone(),
                category: q.category.clone(),
                gold: q.gold_claim_ids.clone(),
                gold_in_bundles: q.gold_claim_ids.iter().filter(|g| heads.contains(g)).copied().collect(),
                gold_selected: q.gold_claim_ids.iter().filter(|g| selected.contains(g)).copied().collect(),
                fact_records: r.interface.records.len(),
                insufficient: matches!(r.outcome, Ok(ref o) if o.is_insufficient()),
            });
            report.traces.extend(trace_records(&r, &cfg));
        }
        if !records.is_empty() {
            let labeled: Vec<&QueryRecord> = records.iter().filter(|r| !r.gold.is_empty()).collect();
            let unlabeled: Vec<&QueryRecord> = records.iter().filter(|r| r.gold.is_empty()).collect();
            report.metrics.push(VariantMetrics {
                variant: name.clone(),
                queries: records.len(),
                labeled: labeled.len(),
                recall_at_bundles: mean(labeled.iter().map(|r| recall(&r.gold_in_bundles, &r.gold))),
                recall_at_selection: mean(labeled.iter().map(|r| recall(&r.gold_selected, &r.gold))),
                mean_fact_records: mean(records.iter().map(|r| r.fact_records as f64)),
                abstain_accuracy: (!unlabeled.is_empty()).then(|| mean(unlabeled.iter().map(|r| f64::from(u8::from(r.insufficient))))),
            });
        }
        report.records.extend(records);
    }
    Ok(report)
}

impl EvalReport {
    pub fn metrics_for(&self, variant: &str) -> Option<&VariantMetrics> {
        self.metrics.iter().find(|m| m.variant == variant)
    }

    /// Aligned plain-text table, one row per variant.
    pub fn table(&self) -> String {
        let header = ["variant", "queries", "recall@bundles", "recall@selection", "mean|F_q|", "abstain_acc"];
        let rows: Vec<[String; 6]> = self
            .metrics
            .iter()
            .map(|m| {
                [
                    m.variant.clone(),
                    m.queries.to_string(),
                    format!("{:.4}", m.recall_at_bundles),
                    format!("{:.4}", m.recall_at_selection),
                    format!("{:.4}", m.mean_fact_records),
                    m.abstain_accuracy.map_or("-".to_string(), |a| format!("{a:.4}")),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
                + "\n"
        };
        let mut out = line(header.to_vec());
        for r in &rows {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        out
    }

    /// One JSON line per variant summary, then one per query record.
    pub fn write_records(&self, mut w: impl Write) -> io::Result<()> {
        #[derive(Serialize)]
        #[serde(tag = "record", rename_all = "snake_case")]
        enum Line<'a> {
            Summary(&'a VariantMetrics),
            Query(&'a QueryRecord),
        }
        for m in &self.metrics {
            serde_json::to_writer(&mut w, &Line::Summary(m))?;
            w.write_all(b"\n")?;
        }
        for r in &self.records {
            serde_json::to_writer(&mut w, &Line::Query(r))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
