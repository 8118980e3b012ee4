//! PII redaction, timestamp ranks, keyed pseudonyms and user deletion.

mod deletion;
mod key;
mod pii;
mod pseudonym;
mod ranks;

pub use deletion::{delete_user, DeletionError};
pub use key::{keyed_hash, KeyError, SecretKey, KEY_LEN};
pub use pii::{anonymize_mentions, anonymize_mentions_with_spans, redact_pii, scrub, PiiCategory, Redacted, Redaction};
pub use pseudonym::{derive_pseudonym, pseudonymize_thread, thread_digest};
pub use ranks::{obfuscate_timestamps, RankMap};
