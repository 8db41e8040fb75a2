//! Line-delimited store file.
//!
//! First line is a header record carrying `format_version` and the
//! conversation metadata; then one atom per line in insertion order; then one
//! view per line. Loading replays every record through the store's
//! validation, so a file that breaks referential integrity fails to load.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atom::{MemoryAtom, RetrievalView};
use crate::store::{ConversationMeta, MemoryStore};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header { format_version: u32, conversation_meta: ConversationMeta },
    Atom(MemoryAtom),
    View(RetrievalView),
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum RecordRef<'a> {
    Header { format_version: u32, conversation_meta: &'a ConversationMeta },
    Atom(&'a MemoryAtom),
    View(&'a RetrievalView),
}

fn write_line<W: Write>(w: &mut W, rec: &RecordRef<'_>) -> io::Result<()> {
    serde_json::to_writer(&mut *w, rec)?;
    w.write_all(b"\n")
}

pub fn write_store<W: Write>(store: &MemoryStore, mut w: W) -> io::Result<()> {
    write_line(
        &mut w,
        &RecordRef::Header { format_version: FORMAT_VERSION, conversation_meta: store.meta() },
    )?;
    for a in store.atoms() {
        write_line(&mut w, &RecordRef::Atom(a))?;
    }
    for v in store.views() {
        write_line(&mut w, &RecordRef::View(v))?;
    }
    w.flush()
}

pub fn store_to_bytes(store: &MemoryStore) -> Vec<u8> {
    let mut buf = Vec::new();
    write_store(store, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_store<R: BufRead>(r: R) -> Result<MemoryStore, PersistError> {
    let mut store: Option<MemoryStore> = None;
    for (i, line) in r.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| PersistError::CorruptRecord { line: line_no, reason };
        let rec: Record = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                // Surface a version mismatch even if the rest of the header is unfamiliar.
                if store.is_none() {
                    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
                        if let Some(found) = v.get("format_version").and_then(|f| f.as_u64()) {
                            if found != u64::from(FORMAT_VERSION) {
                                return Err(PersistError::VersionMismatch { found: found as u32 });
                            }
                        }
                    }
                }
                return Err(corrupt(e.to_string()));
            }
        };
        match (rec, store.as_mut()) {
            (Record::Header { format_version, conversation_meta }, None) => {
                if format_version != FORMAT_VERSION {
                    return Err(PersistError::VersionMismatch { found: format_version });
                }
                store = Some(MemoryStore::new(conversation_meta));
            }
            (Record::Header { .. }, Some(_)) => return Err(corrupt("second header record".into())),
            (_, None) => return Err(corrupt("first record must be the header".into())),
            (Record::Atom(a), Some(st)) => {
                if !st.views().is_empty() {
                    return Err(corrupt("atom record after view records".into()));
                }
                st.add_atom(a).map_err(|e| corrupt(e.to_string()))?;
            }
            (Record::View(v), Some(st)) => st.add_view(v).map_err(|e| corrupt(e.to_string()))?,
        }
    }
    store.ok_or(PersistError::CorruptRecord { line: 1, reason: "missing header record".into() })
}

pub fn persist(store: &MemoryStore, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let f = File::create(path)?;
    write_store(store, BufWriter::new(f))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<MemoryStore, PersistError> {
    let f = File::open(path)?;
    read_store(BufReader::new(f))
}
