//! The validated memory store.
//!
//! Atoms enter only through [`MemoryStore::add_atom`], which enforces the
//! support constraint: every non-page atom cites a nonempty set of spans.
//! The store is append-only; ids are never reused.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::atom::{AtomId, AtomKind, ClaimAtom, MemoryAtom, RetrievalView, ViewKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("{referrer} cites missing atom {missing}")]
    DanglingReference { referrer: AtomId, missing: AtomId },
    #[error("support violation on {id}: {reason}")]
    SupportViolation { id: AtomId, reason: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("{0} is not a claim")]
    NotAClaim(AtomId),
    #[error("unknown atom id {0}")]
    UnknownId(AtomId),
    #[error("invalid atom {id}: {reason}")]
    InvalidAtom { id: AtomId, reason: String },
}

/// Source corpus identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationMeta {
    pub conversation_id: String,
    pub source: String,
}

/// Collection of atoms, views and association sets.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    meta: ConversationMeta,
    atoms: IndexMap<AtomId, MemoryAtom>,
    views: Vec<RetrievalView>,
    /// Ω_a for every claim.
    association_sets: BTreeMap<AtomId, BTreeSet<AtomId>>,
    /// Reverse of `association_sets`: member atom → claims whose Ω holds it.
    member_of: HashMap<AtomId, BTreeSet<AtomId>>,
    view_ids: HashSet<String>,
    next_local: HashMap<(AtomKind, u32), u32>,
    next_page: u32,
    last_turn: Option<usize>,
}

impl PartialEq for MemoryStore {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.atoms.len() == other.atoms.len()
            && self.atoms.iter().eq(other.atoms.iter())
            && self.views == other.views
            && self.association_sets == other.association_sets
    }
}

fn violation(id: AtomId, reason: impl Into<String>) -> StoreError {
    StoreError::SupportViolation { id, reason: reason.into() }
}

fn invalid(id: AtomId, reason: impl Into<String>) -> StoreError {
    StoreError::InvalidAtom { id, reason: reason.into() }
}

impl MemoryStore {
    pub fn new(meta: ConversationMeta) -> Self {
        Self { meta, ..Default::default() }
    }

    pub fn meta(&self) -> &ConversationMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Next unused id for `kind` on `page`. For pages the `page` argument is
    /// ignored and the next page ordinal is returned.
    pub fn next_id(&self, kind: AtomKind, page: u32) -> AtomId {
        match kind {
            AtomKind::Page => AtomId::page_id(self.next_page),
            _ => AtomId::new(kind, page, self.next_local.get(&(kind, page)).copied().unwrap_or(0)),
        }
    }

    pub fn get(&self, id: &AtomId) -> Option<&MemoryAtom> {
        self.atoms.get(id)
    }

    pub fn contains(&self, id: &AtomId) -> bool {
        self.atoms.contains_key(id)
    }

    /// All atoms in insertion order.
    pub fn atoms(&self) -> impl Iterator<Item = &MemoryAtom> {
        self.atoms.values()
    }

    pub fn atoms_of(&self, kind: AtomKind) -> impl Iterator<Item = &MemoryAtom> {
        self.atoms.values().filter(move |a| a.kind() == kind)
    }

    pub fn claims(&self) -> impl Iterator<Item = &ClaimAtom> {
        self.atoms.values().filter_map(MemoryAtom::as_claim)
    }

    pub fn count(&self, kind: AtomKind) -> usize {
        self.atoms_of(kind).count()
    }

    pub fn views(&self) -> &[RetrievalView] {
        &self.views
    }

    pub fn association_sets(&self) -> &BTreeMap<AtomId, BTreeSet<AtomId>> {
        &self.association_sets
    }

    /// Ω_a of a claim.
    pub fn association_set(&self, claim_id: &AtomId) -> Result<&BTreeSet<AtomId>, StoreError> {
        match self.atoms.get(claim_id) {
            None => Err(StoreError::UnknownId(*claim_id)),
            Some(MemoryAtom::Claim(_)) => Ok(&self.association_sets[claim_id]),
            Some(_) => Err(StoreError::NotAClaim(*claim_id)),
        }
    }

    /// Claims whose association set contains `member`.
    pub fn claims_associated_with(&self, member: &AtomId) -> impl Iterator<Item = &AtomId> {
        self.member_of.get(member).into_iter().flatten()
    }

    fn resolve(&self, referrer: AtomId, id: AtomId) -> Result<&MemoryAtom, StoreError> {
        self.atoms
            .get(&id)
            .ok_or(StoreError::DanglingReference { referrer, missing: id })
    }

    fn check_support(&self, id: AtomId, support: &[AtomId]) -> Result<(), StoreError> {
        if support.is_empty() {
            return Err(violation(id, "empty support"));
        }
        for s in support {
            let a = self.resolve(id, *s)?;
            if a.kind() != AtomKind::Span {
                return Err(violation(id, format!("support {s} is a {}, not a span", a.kind().name())));
            }
        }
        let distinct: HashSet<_> = support.iter().collect();
        if distinct.len() != support.len() {
            return Err(invalid(id, "repeated support span"));
        }
        Ok(())
    }

    fn cited_span_contains(&self, support: &[AtomId], needle: &str) -> bool {
        support.iter().any(|s| {
            self.atoms
                .get(s)
                .and_then(MemoryAtom::as_span)
                .is_some_and(|sp| sp.verbatim_text.contains(needle))
        })
    }

    fn validate(&self, atom: &MemoryAtom) -> Result<(), StoreError> {
        let id = atom.id();
        if id.kind != atom.kind() {
            return Err(invalid(id, format!("id kind does not match {} atom", atom.kind().name())));
        }
        if self.atoms.contains_key(&id) {
            return Err(StoreError::DuplicateId(id.to_string()));
        }
        if id.kind != AtomKind::Page {
            match self.atoms.get(&AtomId::page_id(id.page)) {
                Some(MemoryAtom::Page(_)) => {}
                _ => {
                    return Err(StoreError::DanglingReference {
                        referrer: id,
                        missing: AtomId::page_id(id.page),
                    })
                }
            }
        }
        match atom {
            MemoryAtom::Page(p) => {
                if id.local != 0 {
                    return Err(invalid(id, "page ordinal must be 00"));
                }
                if p.turn_range.0 > p.turn_range.1 {
                    return Err(invalid(id, "inverted turn range"));
                }
                if self.last_turn.is_some_and(|t| p.turn_range.0 <= t) {
                    return Err(invalid(id, "turn range overlaps or precedes an earlier page"));
                }
            }
            MemoryAtom::Span(s) => {
                let page = self.resolve(id, s.page_id)?;
                let MemoryAtom::Page(page) = page else {
                    return Err(invalid(id, format!("page_id {} is not a page", s.page_id)));
                };
                if s.page_id.page != id.page {
                    return Err(invalid(id, "span id page differs from its page_id"));
                }
                let (a, b) = s.char_range;
                let exact = a < b
                    && page.raw_text.get(a..b).is_some_and(|t| t == s.verbatim_text);
                if !exact {
                    return Err(invalid(id, "verbatim_text does not match page substring"));
                }
                if s.turn_index < page.turn_range.0 || s.turn_index > page.turn_range.1 {
                    return Err(invalid(id, "turn_index outside page turn range"));
                }
            }
            MemoryAtom::Handle(h) => {
                self.check_support(id, &h.support_span_ids)?;
                if h.surface_text.trim().is_empty()
                    || !self.cited_span_contains(&h.support_span_ids, &h.surface_text)
                {
                    return Err(invalid(id, "surface_text is not a substring of a cited span"));
                }
            }
            MemoryAtom::Time(t) => {
                self.check_support(id, &t.support_span_ids)?;
                if t.normalized.is_none() && t.relative_expression.is_none() {
                    return Err(invalid(id, "time atom has neither normalized nor relative expression"));
                }
                if t.normalized.is_some_and(|iv| iv.start > iv.end) {
                    return Err(invalid(id, "inverted interval"));
                }
                if t.surface_text.trim().is_empty() {
                    return Err(invalid(id, "empty surface_text"));
                }
            }
            MemoryAtom::Pivot(v) => {
                self.check_support(id, &v.support_span_ids)?;
                if v.referent_label.trim().is_empty() {
                    return Err(invalid(id, "empty referent_label"));
                }
                if v.support_text.is_empty()
                    || !self.cited_span_contains(&v.support_span_ids, &v.support_text)
                {
                    return Err(invalid(id, "support_text is not a substring of the cited span"));
                }
            }
            MemoryAtom::Claim(c) => {
                self.check_support(id, &c.support_span_ids)?;
                if c.support_span_ids.len() > 3 {
                    return Err(violation(id, "more than three support spans"));
                }
                if !c.support_span_ids.iter().any(|s| s.page == id.page) {
                    return Err(violation(id, "no support span on the claim's own page"));
                }
                if c.claim_text.trim().is_empty() {
                    return Err(invalid(id, "empty claim_text"));
                }
                let mut seen = HashSet::new();
                for cue in &c.linked_cue_ids {
                    let a = self.resolve(id, *cue)?;
                    if !a.kind().is_cue() {
                        return Err(invalid(id, format!("linked cue {cue} is a {}", a.kind().name())));
                    }
                    if !seen.insert(cue) {
                        return Err(invalid(id, "repeated linked cue"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Validates and stores an atom. For claims, Ω_a is materialized.
    pub fn add_atom(&mut self, atom: impl Into<MemoryAtom>) -> Result<AtomId, StoreError> {
        let atom = atom.into();
        self.validate(&atom)?;
        let id = atom.id();
        match &atom {
            MemoryAtom::Page(p) => {
                self.next_page = self.next_page.max(id.page + 1);
                self.last_turn = Some(p.turn_range.1);
            }
            MemoryAtom::Claim(c) => {
                let omega: BTreeSet<AtomId> = c
                    .support_span_ids
                    .iter()
                    .chain(&c.linked_cue_ids)
                    .copied()
                    .collect();
                for m in &omega {
                    self.member_of.entry(*m).or_default().insert(id);
                }
                self.association_sets.insert(id, omega);
            }
            _ => {}
        }
        if id.kind != AtomKind::Page {
            let slot = self.next_local.entry((id.kind, id.page)).or_insert(0);
            *slot = (*slot).max(id.local + 1);
        }
        self.atoms.insert(id, atom);
        Ok(id)
    }

    /// Validates and stores a retrieval view.
    pub fn add_view(&mut self, view: RetrievalView) -> Result<(), StoreError> {
        let owner = view.owner_atom_id;
        let owner_atom = self.atoms.get(&owner).ok_or(StoreError::UnknownId(owner))?;
        let expected = match view.view_kind {
            ViewKind::ClaimText => AtomKind::Claim,
            ViewKind::SpanText | ViewKind::SpanContext => AtomKind::Span,
            ViewKind::HandleAlias => AtomKind::Handle,
            ViewKind::TimeKey => AtomKind::Time,
            ViewKind::PivotKey => AtomKind::Pivot,
        };
        if owner_atom.kind() != expected {
            return Err(invalid(owner, format!("{} view owned by a {}", view.view_kind.name(), owner_atom.kind().name())));
        }
        for t in &view.target_claim_ids {
            match self.atoms.get(t) {
                None => return Err(StoreError::DanglingReference { referrer: owner, missing: *t }),
                Some(MemoryAtom::Claim(_)) => {}
                Some(_) => return Err(StoreError::NotAClaim(*t)),
            }
        }
        if !self.view_ids.insert(view.view_id.clone()) {
            return Err(StoreError::DuplicateId(view.view_id));
        }
        self.views.push(view);
        Ok(())
    }

    /// Full scan of the store invariants. Returns every violation found.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in self.atoms.values() {
            if a.kind() == AtomKind::Page {
                continue;
            }
            let sup = a.support();
            if sup.is_empty() {
                out.push(format!("{}: empty support", a.id()));
            }
            for s in &sup {
                if self.atoms.get(s).map(MemoryAtom::kind) != Some(AtomKind::Span) {
                    out.push(format!("{}: support {s} is not a stored span", a.id()));
                }
            }
            if let MemoryAtom::Claim(c) = a {
                let omega = &self.association_sets[&c.id];
                for s in &c.support_span_ids {
                    if !omega.contains(s) {
                        out.push(format!("{}: Ω misses support {s}", c.id));
                    }
                }
                for m in omega {
                    match self.atoms.get(m).map(MemoryAtom::kind) {
                        Some(AtomKind::Page) | Some(AtomKind::Claim) | None => {
                            out.push(format!("{}: Ω holds {m}", c.id))
                        }
                        _ => {}
                    }
                }
            }
        }
        for v in &self.views {
            if !self.atoms.contains_key(&v.owner_atom_id) {
                out.push(format!("view {}: owner missing", v.view_id));
            }
            for t in &v.target_claim_ids {
                if self.atoms.get(t).map(MemoryAtom::kind) != Some(AtomKind::Claim) {
                    out.push(format!("view {}: target {t} is not a claim", v.view_id));
                }
            }
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::atom::{HandleAtom, PageAtom, PivotAtom, SpanAtom, TimeAtom};

    pub fn page_with_spans(store: &mut MemoryStore, sentences: &[&str]) -> (AtomId, Vec<AtomId>) {
        let raw = sentences.join(" ");
        let pid = store.next_id(AtomKind::Page, 0);
        let first_turn = store.last_turn.map_or(0, |t| t + 1);
        store
            .add_atom(PageAtom {
                id: pid,
                session_key: format!("s{}", pid.page),
                turn_range: (first_turn, first_turn),
                raw_text: raw.clone(),
                timestamp_hint: None,
            })
            .unwrap();
        let mut at = 0;
        let mut spans = Vec::new();
        for s in sentences {
            let id = store.next_id(AtomKind::Span, pid.page);
            store
                .add_atom(SpanAtom {
                    id,
                    page_id: pid,
                    speaker: "A".into(),
                    turn_index: first_turn,
                    char_range: (at, at + s.len()),
                    verbatim_text: s.to_string(),
                })
                .unwrap();
            spans.push(id);
            at += s.len() + 1;
        }
        (pid, spans)
    }

    #[test]
    fn first_span_of_first_page_is_s0_00() {
        let mut st = MemoryStore::default();
        let (pid, spans) = page_with_spans(&mut st, &["Hello there."]);
        assert_eq!(pid.to_string(), "P0:00");
        assert_eq!(spans[0].to_string(), "S0:00");
    }

    #[test]
    fn empty_support_is_a_violation() {
        let mut st = MemoryStore::default();
        page_with_spans(&mut st, &["We met at Cafe Roma."]);
        let err = st
            .add_atom(HandleAtom {
                id: st.next_id(AtomKind::Handle, 0),
                surface_text: "Cafe Roma".into(),
                support_span_ids: vec![],
            })
            .unwrap_err();
        assert!(matches!(err, StoreError::SupportViolation { .. }), "{err}");
    }

    #[test]
    fn non_span_support_and_dangling_ids_are_rejected() {
        let mut st = MemoryStore::default();
        let (pid, spans) = page_with_spans(&mut st, &["We met at Cafe Roma."]);
        let h = HandleAtom {
            id: st.next_id(AtomKind::Handle, 0),
            surface_text: "Cafe Roma".into(),
            support_span_ids: vec![pid],
        };
        assert!(matches!(st.add_atom(h).unwrap_err(), StoreError::SupportViolation { .. }));
        let h = HandleAtom {
            id: st.next_id(AtomKind::Handle, 0),
            surface_text: "Cafe Roma".into(),
            support_span_ids: vec![AtomId::new(AtomKind::Span, 0, 9)],
        };
        assert!(matches!(st.add_atom(h).unwrap_err(), StoreError::DanglingReference { .. }));
        let h = HandleAtom {
            id: st.next_id(AtomKind::Handle, 0),
            surface_text: "Cafe Paris".into(),
            support_span_ids: spans.clone(),
        };
        assert!(matches!(st.add_atom(h).unwrap_err(), StoreError::InvalidAtom { .. }));
        assert!(st.check_invariants().is_empty());
    }

    #[test]
    fn claim_association_set_unions_support_and_cues() {
        let mut st = MemoryStore::default();
        for _ in 0..3 {
            page_with_spans(&mut st, &["x."]);
        }
        let (_, spans) = page_with_spans(&mut st, &["Filler.", "We met at Cafe Roma.", "It was last Friday."]);
        let (s1, s2) = (spans[1], spans[2]);
        assert_eq!(s1.to_string(), "S3:01");
        let h = st
            .add_atom(HandleAtom { id: st.next_id(AtomKind::Handle, 3), surface_text: "Cafe Roma".into(), support_span_ids: vec![s1] })
            .unwrap();
        let t = st
            .add_atom(TimeAtom {
                id: st.next_id(AtomKind::Time, 3),
                surface_text: "last Friday".into(),
                normalized: None,
                relative_expression: Some("last Friday".into()),
                support_span_ids: vec![s2],
            })
            .unwrap();
        assert_eq!(h.to_string(), "H3:00");
        let c = st
            .add_atom(ClaimAtom {
                id: st.next_id(AtomKind::Claim, 3),
                claim_text: "A met someone at Cafe Roma last Friday.".into(),
                support_span_ids: vec![s1, s2],
                linked_cue_ids: vec![h],
            })
            .unwrap();
        // Oracle: union of support and cue links.
        let expect: BTreeSet<AtomId> = [s1, s2, h].into_iter().collect();
        assert_eq!(st.association_set(&c).unwrap(), &expect);
        let c2 = st
            .add_atom(ClaimAtom {
                id: st.next_id(AtomKind::Claim, 3),
                claim_text: "Second.".into(),
                support_span_ids: vec![s1, s2],
                linked_cue_ids: vec![h, t],
            })
            .unwrap();
        assert_eq!(st.association_set(&c2).unwrap().len(), 4);
        assert_eq!(st.claims_associated_with(&s1).copied().collect::<Vec<_>>(), vec![c, c2]);
        assert!(matches!(st.association_set(&AtomId::page_id(0)), Err(StoreError::NotAClaim(_))));
        assert!(matches!(
            st.association_set(&AtomId::new(AtomKind::Claim, 9, 0)),
            Err(StoreError::UnknownId(_))
        ));
        assert!(st.check_invariants().is_empty());
    }

    #[test]
    fn singleton_association_for_minimal_claim() {
        let mut st = MemoryStore::default();
        let (_, spans) = page_with_spans(&mut st, &["I got the job."]);
        let c = st
            .add_atom(ClaimAtom { id: st.next_id(AtomKind::Claim, 0), claim_text: "A got the job.".into(), support_span_ids: vec![spans[0]], linked_cue_ids: vec![] })
            .unwrap();
        assert_eq!(st.association_set(&c).unwrap().iter().collect::<Vec<_>>(), vec![&spans[0]]);
    }

    #[test]
    fn claim_support_bounds() {
        let mut st = MemoryStore::default();
        let (_, a) = page_with_spans(&mut st, &["One.", "Two.", "Three.", "Four."]);
        let (_, b) = page_with_spans(&mut st, &["Five."]);
        let mk = |st: &MemoryStore, page: u32, sup: Vec<AtomId>| ClaimAtom {
            id: st.next_id(AtomKind::Claim, page),
            claim_text: "c".into(),
            support_span_ids: sup,
            linked_cue_ids: vec![],
        };
        assert!(st.add_atom(mk(&st, 0, a.clone())).is_err(), "four supports");
        assert!(st.add_atom(mk(&st, 0, vec![])).is_err());
        assert!(st.add_atom(mk(&st, 1, vec![a[0]])).is_err(), "no own-page support");
        assert!(st.add_atom(mk(&st, 1, vec![b[0], a[0]])).is_ok(), "cross-page with own-page anchor");
    }

    #[test]
    fn duplicate_and_mismatched_ids() {
        let mut st = MemoryStore::default();
        let (_, spans) = page_with_spans(&mut st, &["We finished the mural."]);
        let v = PivotAtom {
            id: st.next_id(AtomKind::Pivot, 0),
            referent_label: "mural".into(),
            support_span_ids: vec![spans[0]],
            support_text: "finished the mural".into(),
        };
        st.add_atom(v.clone()).unwrap();
        assert!(matches!(st.add_atom(v.clone()).unwrap_err(), StoreError::DuplicateId(_)));
        let mut wrong = v;
        wrong.id = AtomId::new(AtomKind::Claim, 0, 5);
        assert!(matches!(st.add_atom(wrong).unwrap_err(), StoreError::InvalidAtom { .. }));
    }

    #[test]
    fn span_must_match_page_text() {
        let mut st = MemoryStore::default();
        let (pid, _) = page_with_spans(&mut st, &["Hello there."]);
        let bad = SpanAtom {
            id: st.next_id(AtomKind::Span, 0),
            page_id: pid,
            speaker: "A".into(),
            turn_index: 0,
            char_range: (0, 5),
            verbatim_text: "Howdy".into(),
        };
        assert!(st.add_atom(bad).is_err());
    }
}
