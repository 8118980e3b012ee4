use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The closed set of interactions a dataset records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Post,
    Reply,
    Quote,
    PostUpdate,
    PostDelete,
    Repost,
    Unrepost,
    Like,
    Unlike,
    Follow,
    Unfollow,
    Block,
    Unblock,
}

impl ActionKind {
    pub const ALL: [ActionKind; 13] = [
        ActionKind::Post,
        ActionKind::Reply,
        ActionKind::Quote,
        ActionKind::PostUpdate,
        ActionKind::PostDelete,
        ActionKind::Repost,
        ActionKind::Unrepost,
        ActionKind::Like,
        ActionKind::Unlike,
        ActionKind::Follow,
        ActionKind::Unfollow,
        ActionKind::Block,
        ActionKind::Unblock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Post => "post",
            ActionKind::Reply => "reply",
            ActionKind::Quote => "quote",
            ActionKind::PostUpdate => "post_update",
            ActionKind::PostDelete => "post_delete",
            ActionKind::Repost => "repost",
            ActionKind::Unrepost => "unrepost",
            ActionKind::Like => "like",
            ActionKind::Unlike => "unlike",
            ActionKind::Follow => "follow",
            ActionKind::Unfollow => "unfollow",
            ActionKind::Block => "block",
            ActionKind::Unblock => "unblock",
        }
    }

    /// Position in [`ActionKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Follow/unfollow/block/unblock target a user rather than a post.
    pub fn is_user_directed(self) -> bool {
        matches!(self, ActionKind::Follow | ActionKind::Unfollow | ActionKind::Block | ActionKind::Unblock)
    }

    pub fn is_text_directed(self) -> bool {
        !self.is_user_directed()
    }

    pub fn carries_text(self) -> bool {
        matches!(self, ActionKind::Post | ActionKind::Reply | ActionKind::Quote | ActionKind::PostUpdate)
    }

    /// Kinds that create a new post which other events can reference.
    pub fn authors_post(self) -> bool {
        matches!(self, ActionKind::Post | ActionKind::Reply | ActionKind::Quote)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for ActionKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL.iter().copied().find(|k| k.as_str() == s).ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// One platform event in the canonical JSONL schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEvent {
    pub did: String,
    pub uri: String,
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub langs: Option<Vec<String>>,
    pub created_at: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_did: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_uri: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvariantViolation {
    #[error("`{kind}` event must carry text")]
    MissingText { kind: ActionKind },
    #[error("`{kind}` event must not carry text")]
    UnexpectedText { kind: ActionKind },
    #[error("`{kind}` event must name a subject user")]
    MissingSubjectDid { kind: ActionKind },
    #[error("`{kind}` event must not name a subject user")]
    UnexpectedSubjectDid { kind: ActionKind },
    #[error("reply event has no parent_uri")]
    ReplyWithoutParent,
}

impl RawEvent {
    /// Checks the per-event schema invariants (root reachability needs the
    /// whole corpus and is checked during thread assembly).
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let kind = self.kind;
        match (kind.carries_text(), self.text.is_some()) {
            (true, false) => return Err(InvariantViolation::MissingText { kind }),
            (false, true) => return Err(InvariantViolation::UnexpectedText { kind }),
            _ => {}
        }
        match (kind.is_user_directed(), self.subject_did.is_some()) {
            (true, false) => return Err(InvariantViolation::MissingSubjectDid { kind }),
            (false, true) => return Err(InvariantViolation::UnexpectedSubjectDid { kind }),
            _ => {}
        }
        if kind == ActionKind::Reply && self.parent_uri.is_none() {
            return Err(InvariantViolation::ReplyWithoutParent);
        }
        Ok(())
    }

    /// Global ordering key: creation time, ties broken by uri bytes.
    pub fn order_key(&self) -> (i64, &str) {
        (self.created_at, self.uri.as_str())
    }
}
