use std::collections::HashMap;

use super::key::{keyed_hash, KeyError, SecretKey, KEY_LEN};
use crate::threads::{Element, ElementType, Thread};

const UNIT_SEP: u8 = 0x1f;
const RECORD_SEP: u8 = 0x1e;

/// Keyed digest of a thread's identifier-free content: element texts, then
/// action kinds, then ranks, then the cluster label. Authors and ids never
/// enter the digest.
pub fn thread_digest(key: &SecretKey, elements: &[Element], cluster: u32) -> [u8; 32] {
    let mut buf: Vec<u8> = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        if i > 0 {
            buf.push(UNIT_SEP);
        }
        buf.extend_from_slice(e.text.as_deref().unwrap_or("").as_bytes());
    }
    buf.push(RECORD_SEP);
    for (i, e) in elements.iter().enumerate() {
        if i > 0 {
            buf.push(UNIT_SEP);
        }
        buf.extend_from_slice(e.kind.as_str().as_bytes());
        if e.element_type == ElementType::Action {
            buf.extend_from_slice(b"!");
        }
    }
    buf.push(RECORD_SEP);
    for (i, e) in elements.iter().enumerate() {
        if i > 0 {
            buf.push(UNIT_SEP);
        }
        buf.extend_from_slice(e.rank.to_string().as_bytes());
    }
    buf.push(RECORD_SEP);
    buf.extend_from_slice(cluster.to_string().as_bytes());
    key.keyed_hash(&[&buf])
}

/// `"user_"` followed by the first 16 hex digits of the keyed hash of
/// `thread_digest ‖ did`.
pub fn derive_pseudonym(key: &[u8], thread_digest: &[u8], did: &str) -> Result<String, KeyError> {
    if key.len() != KEY_LEN {
        return Err(KeyError::Length(key.len()));
    }
    let mac = keyed_hash(key, &[thread_digest, did.as_bytes()]);
    Ok(format!("user_{}", &hex::encode(mac)[..16]))
}

/// Replaces every author DID with a per-thread pseudonym and sets
/// `thread_id` to the hex thread digest.
pub fn pseudonymize_thread(key: &SecretKey, mut thread: Thread) -> Thread {
    let digest = thread_digest(key, &thread.elements, thread.cluster);
    let mut cache: HashMap<String, String> = HashMap::new();
    for e in &mut thread.elements {
        let pseudo = cache
            .entry(e.author.clone())
            .or_insert_with(|| derive_pseudonym(key.as_bytes(), &digest, &e.author).expect("key length is fixed"))
            .clone();
        e.author = pseudo;
    }
    thread.thread_id = hex::encode(digest);
    thread
}
