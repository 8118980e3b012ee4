//! Event parsing, the Jetstream adapter and corpus curation filters.

mod event;
mod filter;
pub mod jetstream;
mod parse;

pub use event::{ActionKind, InvariantViolation, RawEvent, UnknownKind};
pub use filter::{
    curate, keyword_filter, language_filter, prune_low_activity, CurationConfig, KeywordMatcher, KeywordSet,
};
pub use jetstream::{AdapterError, JetstreamAdapter};
pub use parse::{parse_event, read_events, serialize_event, IngestError, Parsed, Skipped};
