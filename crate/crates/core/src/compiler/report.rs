//! Compilation report: every rejected proposal and every failed provider
//! call, one record per line when written out.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::atom::AtomId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub page_id: AtomId,
    pub provider: String,
    pub reason: String,
    pub payload_excerpt: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileReport {
    pub pages: usize,
    pub spans: usize,
    pub cues: usize,
    pub claims: usize,
    pub views: usize,
    pub rejections: Vec<Rejection>,
    /// Pages on which a provider call failed.
    pub flagged_pages: Vec<AtomId>,
    /// `(page, valid claims dropped by the budget)`.
    pub truncated: Vec<(AtomId, usize)>,
}

impl CompileReport {
    pub fn has_provider_failure(&self) -> bool {
        !self.flagged_pages.is_empty()
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for r in &self.rejections {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
