//! Normalizes Jetstream commit messages into [`RawEvent`]s.
//!
//! Jetstream emits one JSON object per repository commit:
//!
//! ```json
//! {"did":"did:plc:…","time_us":1725911162329308,"kind":"commit",
//!  "commit":{"operation":"create","collection":"app.bsky.feed.like",
//!            "rkey":"3l3qo2vuowo2b","record":{"subject":{"uri":"at://…"}}}}
//! ```
//!
//! Delete operations carry no record, so the subject of an unlike, unrepost,
//! unfollow or unblock is recovered from the create seen earlier in the same
//! session. Deletes whose create was never observed are dropped.

use std::collections::HashMap;

use serde_json::Value;
use tracing::{debug, warn};

use super::event::{ActionKind, RawEvent};

pub const POST: &str = "app.bsky.feed.post";
pub const LIKE: &str = "app.bsky.feed.like";
pub const REPOST: &str = "app.bsky.feed.repost";
pub const FOLLOW: &str = "app.bsky.graph.follow";
pub const BLOCK: &str = "app.bsky.graph.block";

/// Collections that map onto the action set.
pub const ACTION_COLLECTIONS: [&str; 5] = [POST, LIKE, REPOST, FOLLOW, BLOCK];

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("malformed Jetstream message: {0}")]
    Json(#[from] serde_json::Error),
    #[error("commit message without a `commit` payload")]
    MissingCommit,
    #[error("commit is missing `{0}`")]
    MissingField(&'static str),
}

#[derive(Debug, Default)]
pub struct JetstreamAdapter {
    // record uri -> subject (post uri or user did) for later deletes
    subjects: HashMap<String, String>,
}

impl JetstreamAdapter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn adapt_str(&mut self, msg: &str) -> Result<Option<RawEvent>, AdapterError> {
        let value: Value = serde_json::from_str(msg)?;
        self.adapt(&value)
    }

    pub fn adapt(&mut self, msg: &Value) -> Result<Option<RawEvent>, AdapterError> {
        match msg.get("kind").and_then(Value::as_str) {
            Some("commit") | None => {}
            // identity and account events are not actions
            Some(_) => return Ok(None),
        }
        let commit = msg.get("commit").ok_or(AdapterError::MissingCommit)?;
        let did = str_field(msg, "did").ok_or(AdapterError::MissingField("did"))?;
        let time_us = msg.get("time_us").and_then(Value::as_i64).ok_or(AdapterError::MissingField("time_us"))?;
        let collection = str_field(commit, "collection").ok_or(AdapterError::MissingField("collection"))?;
        let operation = str_field(commit, "operation").ok_or(AdapterError::MissingField("operation"))?;
        let rkey = str_field(commit, "rkey").ok_or(AdapterError::MissingField("rkey"))?;

        if !ACTION_COLLECTIONS.contains(&collection) {
            return Ok(None);
        }
        let uri = format!("at://{did}/{collection}/{rkey}");
        let record = commit.get("record");
        let mut event = RawEvent {
            did: did.to_string(),
            uri: uri.clone(),
            kind: ActionKind::Post,
            text: None,
            langs: None,
            created_at: time_us,
            subject_uri: None,
            subject_did: None,
            parent_uri: None,
            root_uri: None,
        };

        match (collection, operation) {
            (POST, "create") | (POST, "update") => {
                let record = record.ok_or(AdapterError::MissingField("record"))?;
                event.text = Some(str_field(record, "text").unwrap_or_default().to_string());
                event.langs = record.get("langs").and_then(|l| {
                    l.as_array().map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
                });
                if operation == "update" {
                    event.kind = ActionKind::PostUpdate;
                    event.subject_uri = Some(uri);
                } else {
                    let parent = record.pointer("/reply/parent/uri").and_then(Value::as_str);
                    let root = record.pointer("/reply/root/uri").and_then(Value::as_str);
                    event.parent_uri = parent.map(String::from);
                    event.root_uri = root.map(String::from);
                    event.kind = if let Some(quoted) = embedded_record(record) {
                        event.subject_uri = Some(quoted.to_string());
                        ActionKind::Quote
                    } else if parent.is_some() {
                        ActionKind::Reply
                    } else {
                        ActionKind::Post
                    };
                }
            }
            (POST, "delete") => {
                event.kind = ActionKind::PostDelete;
                event.subject_uri = Some(uri);
            }
            (LIKE | REPOST, "create") => {
                let subject = record
                    .and_then(|r| r.pointer("/subject/uri"))
                    .and_then(Value::as_str)
                    .ok_or(AdapterError::MissingField("record.subject.uri"))?;
                event.kind = if collection == LIKE { ActionKind::Like } else { ActionKind::Repost };
                event.subject_uri = Some(subject.to_string());
                self.subjects.insert(uri, subject.to_string());
            }
            (FOLLOW | BLOCK, "create") => {
                let subject = record
                    .and_then(|r| r.get("subject"))
                    .and_then(Value::as_str)
                    .ok_or(AdapterError::MissingField("record.subject"))?;
                event.kind = if collection == FOLLOW { ActionKind::Follow } else { ActionKind::Block };
                event.subject_did = Some(subject.to_string());
                self.subjects.insert(uri, subject.to_string());
            }
            (LIKE | REPOST | FOLLOW | BLOCK, "delete") => {
                let Some(subject) = self.subjects.remove(&uri) else {
                    warn!(%uri, "delete of a record not seen in this session; dropped");
                    return Ok(None);
                };
                match collection {
                    LIKE => {
                        event.kind = ActionKind::Unlike;
                        event.subject_uri = Some(subject);
                    }
                    REPOST => {
                        event.kind = ActionKind::Unrepost;
                        event.subject_uri = Some(subject);
                    }
                    FOLLOW => {
                        event.kind = ActionKind::Unfollow;
                        event.subject_did = Some(subject);
                    }
                    _ => {
                        event.kind = ActionKind::Unblock;
                        event.subject_did = Some(subject);
                    }
                }
            }
            (_, op) => {
                debug!(collection, op, "ignoring operation");
                return Ok(None);
            }
        }
        debug_assert!(event.validate().is_ok());
        Ok(Some(event))
    }
}

fn str_field<'a>(v: &'a Value, key: &str) -> Option<&'a str> {
    v.get(key).and_then(Value::as_str)
}

// app.bsky.embed.record or the record half of app.bsky.embed.recordWithMedia
fn embedded_record(record: &Value) -> Option<&str> {
    let embed = record.get("embed")?;
    match embed.get("$type").and_then(Value::as_str) {
        Some("app.bsky.embed.record") => embed.pointer("/record/uri").and_then(Value::as_str),
        Some("app.bsky.embed.recordWithMedia") => embed.pointer("/record/record/uri").and_then(Value::as_str),
        _ => None,
    }
}

/// Subscription URL for a Jetstream endpoint, e.g.
/// `wss://jetstream2.us-east.bsky.network/subscribe`.
pub fn subscribe_url(endpoint: &str, collections: &[String], cursor: Option<i64>) -> String {
    let mut url = endpoint.trim_end_matches('/').to_string();
    if !url.ends_with("/subscribe") {
        url.push_str("/subscribe");
    }
    let mut params: Vec<String> = collections.iter().map(|c| format!("wantedCollections={c}")).collect();
    if let Some(c) = cursor {
        params.push(format!("cursor={c}"));
    }
    if !params.is_empty() {
        url.push('?');
        url.push_str(&params.join("&"));
    }
    url
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn commit(did: &str, op: &str, collection: &str, rkey: &str, record: Option<Value>) -> Value {
        let mut c = json!({"rev": "3l3", "operation": op, "collection": collection, "rkey": rkey});
        if let Some(r) = record {
            c["record"] = r;
            c["cid"] = json!("bafyrei");
        }
        json!({"did": did, "time_us": 1725911162329308i64, "kind": "commit", "commit": c})
    }

    #[test]
    fn like_maps_subject() {
        let msg = commit(
            "did:plc:alice",
            "create",
            LIKE,
            "3l3qo2vuowo2b",
            Some(json!({
                "$type": "app.bsky.feed.like",
                "createdAt": "2024-09-09T19:46:02.102Z",
                "subject": {"cid": "bafyreidc", "uri": "at://did:plc:bob/app.bsky.feed.post/3l3pte3p2e325"}
            })),
        );
        let e = JetstreamAdapter::new().adapt(&msg).unwrap().unwrap();
        assert_eq!(e.kind, ActionKind::Like);
        assert_eq!(e.did, "did:plc:alice");
        assert_eq!(e.uri, "at://did:plc:alice/app.bsky.feed.like/3l3qo2vuowo2b");
        assert_eq!(e.subject_uri.as_deref(), Some("at://did:plc:bob/app.bsky.feed.post/3l3pte3p2e325"));
        assert_eq!(e.created_at, 1725911162329308);
        assert!(e.text.is_none() && e.subject_did.is_none());
    }

    #[test]
    fn post_with_reply_parent_is_reply() {
        let msg = commit(
            "did:plc:alice",
            "create",
            POST,
            "3l3r",
            Some(json!({
                "$type": "app.bsky.feed.post",
                "text": "agreed",
                "langs": ["en"],
                "reply": {
                    "parent": {"cid": "c1", "uri": "at://did:plc:bob/app.bsky.feed.post/p2"},
                    "root": {"cid": "c0", "uri": "at://did:plc:carol/app.bsky.feed.post/p1"}
                }
            })),
        );
        let e = JetstreamAdapter::new().adapt(&msg).unwrap().unwrap();
        assert_eq!(e.kind, ActionKind::Reply);
        assert_eq!(e.text.as_deref(), Some("agreed"));
        assert_eq!(e.langs, Some(vec!["en".to_string()]));
        assert_eq!(e.parent_uri.as_deref(), Some("at://did:plc:bob/app.bsky.feed.post/p2"));
        assert_eq!(e.root_uri.as_deref(), Some("at://did:plc:carol/app.bsky.feed.post/p1"));
    }

    #[test]
    fn embed_record_is_quote() {
        let msg = commit(
            "did:plc:alice",
            "create",
            POST,
            "q1",
            Some(json!({
                "text": "look",
                "embed": {"$type": "app.bsky.embed.record",
                          "record": {"cid": "c", "uri": "at://did:plc:bob/app.bsky.feed.post/p9"}}
            })),
        );
        let e = JetstreamAdapter::new().adapt(&msg).unwrap().unwrap();
        assert_eq!(e.kind, ActionKind::Quote);
        assert_eq!(e.subject_uri.as_deref(), Some("at://did:plc:bob/app.bsky.feed.post/p9"));

        let with_media = commit(
            "did:plc:alice",
            "create",
            POST,
            "q2",
            Some(json!({
                "text": "look",
                "embed": {"$type": "app.bsky.embed.recordWithMedia",
                          "record": {"record": {"uri": "at://x/app.bsky.feed.post/p"}}}
            })),
        );
        let e = JetstreamAdapter::new().adapt(&with_media).unwrap().unwrap();
        assert_eq!(e.kind, ActionKind::Quote);
    }

    #[test]
    fn plain_post_and_update_and_delete() {
        let mut a = JetstreamAdapter::new();
        let e = a.adapt(&commit("did:plc:a", "create", POST, "p", Some(json!({"text": "hello"})))).unwrap().unwrap();
        assert_eq!(e.kind, ActionKind::Post);
        let u = a.adapt(&commit("did:plc:a", "update", POST, "p", Some(json!({"text": "hello!"})))).unwrap().unwrap();
        assert_eq!(u.kind, ActionKind::PostUpdate);
        assert_eq!(u.subject_uri.as_deref(), Some(e.uri.as_str()));
        let d = a.adapt(&commit("did:plc:a", "delete", POST, "p", None)).unwrap().unwrap();
        assert_eq!(d.kind, ActionKind::PostDelete);
        assert!(d.text.is_none());
    }

    #[test]
    fn follow_then_unfollow() {
        let mut a = JetstreamAdapter::new();
        let f = a
            .adapt(&commit(
                "did:plc:a",
                "create",
                FOLLOW,
                "f1",
                Some(json!({"$type": "app.bsky.graph.follow", "subject": "did:plc:b"})),
            ))
            .unwrap()
            .unwrap();
        assert_eq!(f.kind, ActionKind::Follow);
        assert_eq!(f.subject_did.as_deref(), Some("did:plc:b"));
        let u = a.adapt(&commit("did:plc:a", "delete", FOLLOW, "f1", None)).unwrap().unwrap();
        assert_eq!(u.kind, ActionKind::Unfollow);
        assert_eq!(u.subject_did.as_deref(), Some("did:plc:b"));
        // unknown delete is dropped
        assert!(a.adapt(&commit("did:plc:a", "delete", BLOCK, "zz", None)).unwrap().is_none());
    }

    #[test]
    fn like_then_unlike_and_repost_cycle() {
        let mut a = JetstreamAdapter::new();
        let rec = Some(json!({"subject": {"uri": "at://b/app.bsky.feed.post/1"}}));
        a.adapt(&commit("did:plc:a", "create", REPOST, "r", rec.clone())).unwrap();
        let un = a.adapt(&commit("did:plc:a", "delete", REPOST, "r", None)).unwrap().unwrap();
        assert_eq!(un.kind, ActionKind::Unrepost);
        a.adapt(&commit("did:plc:a", "create", LIKE, "l", rec)).unwrap();
        let un = a.adapt(&commit("did:plc:a", "delete", LIKE, "l", None)).unwrap().unwrap();
        assert_eq!(un.kind, ActionKind::Unlike);
        assert_eq!(un.subject_uri.as_deref(), Some("at://b/app.bsky.feed.post/1"));
    }

    #[test]
    fn out_of_scope_collection_is_none() {
        let msg = commit("did:plc:a", "create", "app.bsky.actor.profile", "self", Some(json!({"displayName": "A"})));
        assert!(JetstreamAdapter::new().adapt(&msg).unwrap().is_none());
        let identity = json!({"did": "did:plc:a", "time_us": 1, "kind": "identity", "identity": {}});
        assert!(JetstreamAdapter::new().adapt(&identity).unwrap().is_none());
    }

    #[test]
    fn missing_commit_is_error() {
        let msg = json!({"did": "did:plc:a", "time_us": 1, "kind": "commit"});
        assert!(matches!(JetstreamAdapter::new().adapt(&msg), Err(AdapterError::MissingCommit)));
    }

    #[test]
    fn outputs_satisfy_invariants() {
        let mut a = JetstreamAdapter::new();
        let msgs = [
            commit("did:plc:a", "create", POST, "1", Some(json!({"text": "x"}))),
            commit("did:plc:a", "create", LIKE, "2", Some(json!({"subject": {"uri": "u"}}))),
            commit("did:plc:a", "create", BLOCK, "3", Some(json!({"subject": "did:plc:z"}))),
            commit("did:plc:a", "delete", BLOCK, "3", None),
            commit("did:plc:a", "delete", LIKE, "2", None),
        ];
        for m in &msgs {
            if let Some(e) = a.adapt(m).unwrap() {
                assert_eq!(e.validate(), Ok(()), "{e:?}");
            }
        }
    }

    #[test]
    fn url_building() {
        let url =
            subscribe_url("wss://jetstream2.us-east.bsky.network", &[POST.to_string(), LIKE.to_string()], Some(42));
        assert_eq!(
            url,
            "wss://jetstream2.us-east.bsky.network/subscribe?wantedCollections=app.bsky.feed.post&wantedCollections=app.bsky.feed.like&cursor=42"
        );
        assert_eq!(subscribe_url("ws://h/subscribe", &[], None), "ws://h/subscribe");
    }
}
