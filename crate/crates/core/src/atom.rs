//! The typed atom schema.
//!
//! Every atom kind is a distinct struct; [`MemoryAtom`] is the tagged union the
//! store holds. Ids render as `{kind}{page}:{ordinal}` with the ordinal
//! zero-padded to two digits (`C23:01`).

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use crate::temporal::DateInterval;

/// Atom kind, in id-ordering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Page,
    Span,
    Handle,
    Time,
    Pivot,
    Claim,
}

impl AtomKind {
    pub const ALL: [AtomKind; 6] = [
        AtomKind::Page,
        AtomKind::Span,
        AtomKind::Handle,
        AtomKind::Time,
        AtomKind::Pivot,
        AtomKind::Claim,
    ];

    pub fn tag(self) -> char {
        match self {
            AtomKind::Page => 'P',
            AtomKind::Span => 'S',
            AtomKind::Handle => 'H',
            AtomKind::Time => 'T',
            AtomKind::Pivot => 'V',
            AtomKind::Claim => 'C',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == c)
    }

    /// Handles, times and pivots.
    pub fn is_cue(self) -> bool {
        matches!(self, AtomKind::Handle | AtomKind::Time | AtomKind::Pivot)
    }

    pub fn name(self) -> &'static str {
        match self {
            AtomKind::Page => "page",
            AtomKind::Span => "span",
            AtomKind::Handle => "handle",
            AtomKind::Time => "time",
            AtomKind::Pivot => "pivot",
            AtomKind::Claim => "claim",
        }
    }
}

/// Identifier of an atom: kind, owning page ordinal and per-page ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId {
    pub kind: AtomKind,
    pub page: u32,
    pub local: u32,
}

impl AtomId {
    pub const fn new(kind: AtomKind, page: u32, local: u32) -> Self {
        Self { kind, page, local }
    }

    pub const fn page_id(page: u32) -> Self {
        Self::new(AtomKind::Page, page, 0)
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}:{:02}", self.kind.tag(), self.page, self.local)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed atom id {0:?}")]
pub struct ParseAtomIdError(pub String);

impl FromStr for AtomId {
    type Err = ParseAtomIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAtomIdError(s.to_string());
        let mut chars = s.chars();
        let kind = chars.next().and_then(AtomKind::from_tag).ok_or_else(err)?;
        let rest = chars.as_str();
        let (page, local) = rest.split_once(':').ok_or_else(err)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        // Canonical form only, so that parsing inverts rendering.
        if !digits(page) || !digits(local) || local.len() < 2 {
            return Err(err());
        }
        if (page.len() > 1 && page.starts_with('0')) || (local.len() > 2 && local.starts_with('0')) {
            return Err(err());
        }
        let id = AtomId {
            kind,
            page: page.parse().map_err(|_| err())?,
            local: local.parse().map_err(|_| err())?,
        };
        Ok(id)
    }
}

impl Serialize for AtomId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AtomId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageAtom {
    pub id: AtomId,
    pub session_key: String,
    /// Inclusive global turn indices.
    pub turn_range: (usize, usize),
    pub raw_text: String,
    pub timestamp_hint: Option<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAtom {
    pub id: AtomId,
    pub page_id: AtomId,
    pub speaker: String,
    /// Global index of the turn the span was cut from.
    pub turn_index: usize,
    /// Half-open byte range into the page's `raw_text`.
    pub char_range: (usize, usize),
    pub verbatim_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandleAtom {
    pub id: AtomId,
    pub surface_text: String,
    pub support_span_ids: Vec<AtomId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeAtom {
    pub id: AtomId,
    pub surface_text: String,
    pub normalized: Option<DateInterval>,
    pub relative_expression: Option<String>,
    pub support_span_ids: Vec<AtomId>,
}

impl TimeAtom {
    /// `surface [normalized]`, or just the surface when undated.
    pub fn rendering(&self) -> String {
        match &self.normalized {
            Some(iv) => format!("{} [{}]", self.surface_text, iv),
            None => self.surface_text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotAtom {
    pub id: AtomId,
    pub referent_label: String,
    pub support_span_ids: Vec<AtomId>,
    pub support_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimAtom {
    pub id: AtomId,
    pub claim_text: String,
    pub support_span_ids: Vec<AtomId>,
    pub linked_cue_ids: Vec<AtomId>,
}

/// Tagged union over the six atom kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemoryAtom {
    Page(PageAtom),
    Span(SpanAtom),
    Handle(HandleAtom),
    Time(TimeAtom),
    Pivot(PivotAtom),
    Claim(ClaimAtom),
}

impl MemoryAtom {
    pub fn id(&self) -> AtomId {
        match self {
            MemoryAtom::Page(a) => a.id,
            MemoryAtom::Span(a) => a.id,
            MemoryAtom::Handle(a) => a.id,
            MemoryAtom::Time(a) => a.id,
            MemoryAtom::Pivot(a) => a.id,
            MemoryAtom::Claim(a) => a.id,
        }
    }

    pub fn kind(&self) -> AtomKind {
        match self {
            MemoryAtom::Page(_) => AtomKind::Page,
            MemoryAtom::Span(_) => AtomKind::Span,
            MemoryAtom::Handle(_) => AtomKind::Handle,
            MemoryAtom::Time(_) => AtomKind::Time,
            MemoryAtom::Pivot(_) => AtomKind::Pivot,
            MemoryAtom::Claim(_) => AtomKind::Claim,
        }
    }

    /// sup(x): the spans grounding the atom. A span grounds itself; pages have
    /// no support.
    pub fn support(&self) -> Vec<AtomId> {
        match self {
            MemoryAtom::Page(_) => Vec::new(),
            MemoryAtom::Span(a) => vec![a.id],
            MemoryAtom::Handle(a) => a.support_span_ids.clone(),
            MemoryAtom::Time(a) => a.support_span_ids.clone(),
            MemoryAtom::Pivot(a) => a.support_span_ids.clone(),
            MemoryAtom::Claim(a) => a.support_span_ids.clone(),
        }
    }

    /// The atom's primary text.
    pub fn text(&self) -> &str {
        match self {
            MemoryAtom::Page(a) => &a.raw_text,
            MemoryAtom::Span(a) => &a.verbatim_text,
            MemoryAtom::Handle(a) => &a.surface_text,
            MemoryAtom::Time(a) => &a.surface_text,
            MemoryAtom::Pivot(a) => &a.referent_label,
            MemoryAtom::Claim(a) => &a.claim_text,
        }
    }

    pub fn as_span(&self) -> Option<&SpanAtom> {
        match self {
            MemoryAtom::Span(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_claim(&self) -> Option<&ClaimAtom> {
        match self {
            MemoryAtom::Claim(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_page(&self) -> Option<&PageAtom> {
        match self {
            MemoryAtom::Page(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<&TimeAtom> {
        match self {
            MemoryAtom::Time(t) => Some(t),
            _ => None,
        }
    }
}

macro_rules! impl_from_atom {
    ($($ty:ident => $var:ident),*) => {
        $(impl From<$ty> for MemoryAtom {
            fn from(a: $ty) -> Self {
                MemoryAtom::$var(a)
            }
        })*
    };
}

impl_from_atom!(PageAtom => Page, SpanAtom => Span, HandleAtom => Handle, TimeAtom => Time, PivotAtom => Pivot, ClaimAtom => Claim);

/// Which index-facing key a view exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    ClaimText,
    SpanText,
    HandleAlias,
    TimeKey,
    PivotKey,
    SpanContext,
}

impl ViewKind {
    pub fn name(self) -> &'static str {
        match self {
            ViewKind::ClaimText => "claim_text",
            ViewKind::SpanText => "span_text",
            ViewKind::HandleAlias => "handle_alias",
            ViewKind::TimeKey => "time_key",
            ViewKind::PivotKey => "pivot_key",
            ViewKind::SpanContext => "span_context",
        }
    }
}

/// A cross-atom access relation: a search key owned by one atom that names the
/// claims reachable through it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalView {
    pub view_id: String,
    pub owner_atom_id: AtomId,
    pub view_kind: ViewKind,
    pub key_text: String,
    pub target_claim_ids: Vec<AtomId>,
}

impl RetrievalView {
    /// Canonical view id: `{owner}#{view_kind}`.
    pub fn canonical_id(owner: AtomId, kind: ViewKind) -> String {
        format!("{owner}#{}", kind.name())
    }
}
