use tracing::debug;

use super::key::SecretKey;
use super::pseudonym::derive_pseudonym;
use crate::threads::{ElementType, Thread};

#[derive(Debug, thiserror::Error)]
pub enum DeletionError {
    #[error("key fingerprint {key} does not match dataset fingerprint {dataset}; refusing to delete")]
    KeyMismatch { key: String, dataset: String },
    #[error("thread id {0:?} is not a hex digest")]
    BadThreadId(String),
}

/// Removes every element authored by `did` from `threads`.
///
/// The per-thread pseudonym is recomputed from the thread id, so no raw
/// events are needed. A thread is dropped outright when the user's element
/// was its terminal action, the post that action responds to, or its last
/// remaining post. Returns the number of the user's elements removed.
pub fn delete_user(
    key: &SecretKey,
    dataset_fingerprint: &str,
    did: &str,
    threads: &mut Vec<Thread>,
) -> Result<usize, DeletionError> {
    if key.fingerprint() != dataset_fingerprint {
        return Err(DeletionError::KeyMismatch { key: key.fingerprint(), dataset: dataset_fingerprint.to_string() });
    }
    let mut removed = 0;
    let mut kept = Vec::with_capacity(threads.len());
    for mut thread in threads.drain(..) {
        let digest =
            hex::decode(&thread.thread_id).map_err(|_| DeletionError::BadThreadId(thread.thread_id.clone()))?;
        let pseudo = derive_pseudonym(key.as_bytes(), &digest, did).expect("key length is fixed");
        let hits = thread.elements.iter().filter(|e| e.author == pseudo).count();
        if hits == 0 {
            kept.push(thread);
            continue;
        }
        removed += hits;
        let n = thread.elements.len();
        let action = &thread.elements[n - 1];
        let target_hit = action.target.is_some_and(|t| thread.elements[t].author == pseudo);
        if action.author == pseudo || target_hit || hits == n - 1 {
            debug!(thread = %thread.thread_id, "dropping thread");
            continue;
        }
        thread.elements.retain(|e| e.author != pseudo);
        let last = thread.elements.len() - 1;
        let terminal = &mut thread.elements[last];
        debug_assert_eq!(terminal.element_type, ElementType::Action);
        terminal.target = Some(last - 1);
        kept.push(thread);
    }
    *threads = kept;
    Ok(removed)
}
