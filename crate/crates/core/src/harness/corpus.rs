//! Corpus readers: the line-delimited turn format and LoCoMo-shaped JSON.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Read};

use chrono::{NaiveDate, NaiveDateTime};
use serde::Deserialize;
use serde_json::Value;
use tracing::warn;

use crate::compiler::{InteractionHistory, Turn};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Parse { line, .. } => Some(*line),
            CorpusError::Io(_) => None,
        }
    }
}

/// Accepts ISO-style date-times (`2023-05-08T13:56:00`, `2023-05-08 13:56`),
/// bare dates, and LoCoMo session stamps such as `1:56 pm on 8 May, 2023`.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    const DATETIME: [&str; 6] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%I:%M %p on %d %B, %Y",
        "%I:%M %p on %d %b, %Y",
    ];
    DATETIME
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

#[derive(Deserialize)]
struct Record {
    session: String,
    speaker: String,
    text: String,
    #[serde(default)]
    timestamp: Option<String>,
    #[serde(default)]
    image_caption: Option<String>,
}

/// One JSON object per line with `session`, `speaker`, `text` and optional
/// `timestamp` and `image_caption`. Blank lines are skipped; line numbers in
/// errors count from 1.
pub fn load_jsonl_corpus(reader: impl BufRead, conversation_id: &str) -> Result<InteractionHistory, CorpusError> {
    let mut turns = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| CorpusError::Parse { line: i + 1, reason };
        let r: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let timestamp = match r.timestamp.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
            Some(t) => Some(parse_timestamp(t).ok_or_else(|| err(format!("unrecognized timestamp {t:?}")))?),
            None => None,
        };
        turns.push(Turn { session_key: r.session, speaker: r.speaker, text: r.text, timestamp, image_caption: r.image_caption });
    }
    Ok(InteractionHistory { conversation_id: conversation_id.to_string(), turns })
}

const SAMPLE_KEYS: &[&str] = &["sample_id", "conversation", "qa", "event_summary", "observation", "session_summary"];
const TURN_KEYS: &[&str] = &["speaker", "dia_id", "text", "img_url", "blip_caption", "query", "img_file", "re-download"];

fn session_number(key: &str) -> Option<u32> {
    key.strip_prefix("session_")?.parse().ok()
}

/// Reads a LoCoMo-style sample: `conversation.session_N` turn lists with
/// `speaker`, `text` and optional `blip_caption`, and `session_N_date_time`
/// stamps. A top-level array uses its first sample. Unknown fields produce
/// warnings (returned and logged) and are otherwise ignored.
pub fn load_locomo_corpus(mut reader: impl Read) -> Result<(InteractionHistory, Vec<String>), CorpusError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let root: Value = serde_json::from_str(&text).map_err(|e| CorpusError::Parse { line: e.line(), reason: e.to_string() })?;
    let bad = |reason: &str| CorpusError::Parse { line: 1, reason: reason.to_string() };
    let mut warnings = Vec::new();
    let sample = match &root {
        Value::Array(items) => {
            if items.len() > 1 {
                warnings.push(format!("{} samples in file; using the first", items.len()));
            }
            items.first().ok_or_else(|| bad("empty sample list"))?
        }
        other => other,
    };
    let sample = sample.as_object().ok_or_else(|| bad("sample is not an object"))?;
    let unknown: BTreeSet<&str> = sample.keys().map(String::as_str).filter(|k| !SAMPLE_KEYS.contains(k)).collect();
    for k in unknown {
        warnings.push(format!("ignoring unknown sample field {k:?}"));
    }
    let conv = sample.get("conversation").and_then(Value::as_object).ok_or_else(|| bad("missing conversation object"))?;
    let mut sessions: Vec<(u32, &str)> = Vec::new();
    for key in conv.keys() {
        if let Some(n) = session_number(key) {
            sessions.push((n, key));
        } else if !(key == "speaker_a" || key == "speaker_b" || key.strip_suffix("_date_time").and_then(session_number).is_some()) {
            warnings.push(format!("ignoring unknown conversation field {key:?}"));
        }
    }
    sessions.sort();
    let mut turns = Vec::new();
    let mut unknown_turn_keys = BTreeSet::new();
    for (_, key) in sessions {
        let stamp = conv.get(&format!("{key}_date_time")).and_then(Value::as_str);
        let timestamp = stamp.and_then(parse_timestamp);
        if let (Some(s), None) = (stamp, timestamp) {
            warnings.push(format!("unrecognized date_time {s:?} for {key}"));
        }
        let list = conv[key].as_array().ok_or_else(|| bad(&format!("{key} is not a list of turns")))?;
        for t in list {
            let obj = t.as_object().ok_or_else(|| bad(&format!("turn in {key} is not an object")))?;
            unknown_turn_keys.extend(obj.keys().filter(|k| !TURN_KEYS.contains(&k.as_str())).cloned());
            let field = |name: &str| obj.get(name).and_then(Value::as_str);
            let speaker = field("speaker").ok_or_else(|| bad(&format!("turn in {key} has no speaker")))?;
            turns.push(Turn {
                session_key: key.to_string(),
                speaker: speaker.to_string(),
                text: field("text").unwrap_or_default().to_string(),
                timestamp,
                image_caption: field("blip_caption").map(str::to_string),
            });
        }
    }
    for k in unknown_turn_keys {
        warnings.push(format!("ignoring unknown turn field {k:?}"));
    }
    for w in &warnings {
        warn!("{w}");
    }
    let id = sample.get("sample_id").and_then(Value::as_str).unwrap_or("locomo").to_string();
    Ok((InteractionHistory { conversation_id: id, turns }, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Datelike;

    #[test]
    fn timestamp_formats() {
        let t = parse_timestamp("1:56 pm on 8 May, 2023").unwrap();
        assert_eq!((t.year(), t.month(), t.day()), (2023, 5, 8));
        assert_eq!(t.format("%H:%M").to_string(), "13:56");
        assert!(parse_timestamp("2023-05-08T10:00:00").is_some());
        assert!(parse_timestamp("2023-05-08").is_some());
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn jsonl_line_numbers() {
        let good = "{\"session\":\"s1\",\"speaker\":\"A\",\"text\":\"hi\"}\n";
        let text = format!("{good}\n{good}{{\"session\":\"s1\"}}\n");
        let e = load_jsonl_corpus(text.as_bytes(), "c").unwrap_err();
        assert_eq!(e.line(), Some(4));
    }
}
