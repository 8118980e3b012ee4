use std::io::BufRead;

use serde::Deserialize;
use tracing::warn;

use super::event::{ActionKind, RawEvent};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: expected a JSON object")]
    NotAnObject { line: usize },
    #[error("reading events: {0}")]
    Io(#[from] std::io::Error),
}

/// A line that was well-formed JSON but could not become a [`RawEvent`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Event(RawEvent),
    Skipped(Skipped),
}

// Everything optional so unknown kinds and missing fields are reported as
// skips instead of hard errors.
#[derive(Deserialize)]
struct LooseEvent {
    did: Option<String>,
    uri: Option<String>,
    kind: Option<String>,
    text: Option<String>,
    langs: Option<Vec<String>>,
    created_at: Option<i64>,
    subject_uri: Option<String>,
    subject_did: Option<String>,
    parent_uri: Option<String>,
    root_uri: Option<String>,
}

/// Parses one JSONL line (1-based `line` is used in diagnostics).
pub fn parse_event(text: &str, line: usize) -> Result<Parsed, IngestError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|source| IngestError::Json { line, source })?;
    if !value.is_object() {
        return Err(IngestError::NotAnObject { line });
    }
    let loose: LooseEvent = match serde_json::from_value(value) {
        Ok(l) => l,
        Err(e) => return Ok(skip(line, format!("field type mismatch: {e}"))),
    };

    let kind = match loose.kind.as_deref() {
        None => return Ok(skip(line, "missing `kind`".into())),
        Some(k) => match k.parse::<ActionKind>() {
            Ok(kind) => kind,
            Err(e) => return Ok(skip(line, e.to_string())),
        },
    };
    let (Some(did), Some(uri), Some(created_at)) = (loose.did, loose.uri, loose.created_at) else {
        return Ok(skip(line, "missing one of `did`, `uri`, `created_at`".into()));
    };
    let event = RawEvent {
        did,
        uri,
        kind,
        text: loose.text,
        langs: loose.langs,
        created_at,
        subject_uri: loose.subject_uri,
        subject_did: loose.subject_did,
        parent_uri: loose.parent_uri,
        root_uri: loose.root_uri,
    };
    if let Err(v) = event.validate() {
        return Ok(skip(line, v.to_string()));
    }
    Ok(Parsed::Event(event))
}

fn skip(line: usize, reason: String) -> Parsed {
    warn!(line, %reason, "skipping event");
    Parsed::Skipped(Skipped { line, reason })
}

/// Reads a JSONL stream. Blank lines are ignored; the first malformed line
/// aborts with its line number.
pub fn read_events<R: BufRead>(reader: R) -> Result<(Vec<RawEvent>, Vec<Skipped>), IngestError> {
    let mut events = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_event(&line, i + 1)? {
            Parsed::Event(e) => events.push(e),
            Parsed::Skipped(s) => skipped.push(s),
        }
    }
    Ok((events, skipped))
}

pub fn serialize_event(event: &RawEvent) -> String {
    serde_json::to_string(event).expect("RawEvent serializes")
}
