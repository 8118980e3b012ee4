use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::ActionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    Post,
    Action,
}

/// One thread element. `author` is a DID before pseudonymization and a
/// pseudonym afterwards. `target` is the in-thread index of the post an
/// action responds to; standalone-post threads have none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Element {
    #[serde(rename = "type")]
    pub element_type: ElementType,
    pub kind: ActionKind,
    pub author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub rank: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thread {
    pub thread_id: String,
    pub cluster: u32,
    pub elements: Vec<Element>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl Thread {
    pub fn terminal(&self) -> Option<&Element> {
        self.elements.last()
    }

    pub fn posts(&self) -> &[Element] {
        match self.elements.split_last() {
            Some((_, posts)) => posts,
            None => &[],
        }
    }

    /// A single element that is both the opening post and the closing action.
    pub fn is_standalone(&self) -> bool {
        self.elements.len() == 1
    }
}

/// The production of `<thread> ::= <post><posts><action>`,
/// `<posts> ::= [<post>]<posts> | ε` that a sequence violates.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("⟨thread⟩ must contain at least one element")]
    Empty,
    #[error("⟨thread⟩ must begin with ⟨post⟩")]
    MustBeginWithPost,
    #[error("⟨thread⟩ must end with ⟨action⟩")]
    MustEndWithAction,
    #[error("⟨posts⟩ admits only ⟨post⟩ elements, found an action at index {index}")]
    ActionInPosts { index: usize },
    #[error("⟨post⟩ at index {index} has non-post kind {kind}")]
    PostKind { index: usize, kind: ActionKind },
}

impl GrammarError {
    pub fn production(&self) -> &'static str {
        match self {
            GrammarError::Empty | GrammarError::MustBeginWithPost | GrammarError::MustEndWithAction => "⟨thread⟩",
            GrammarError::ActionInPosts { .. } => "⟨posts⟩",
            GrammarError::PostKind { .. } => "⟨post⟩",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ThreadError {
    #[error("thread JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("grammar violation: {0}")]
    Grammar(#[from] GrammarError),
    #[error("element {index}: target must reference the last post before the action")]
    Target { index: usize },
}

/// Checks an element sequence against the thread grammar. A lone action
/// whose kind authors a post is the standalone form and is accepted.
pub fn check_grammar(elements: &[Element]) -> Result<(), GrammarError> {
    let (first, last) = match (elements.first(), elements.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(GrammarError::Empty),
    };
    if elements.len() == 1 {
        return match first.element_type {
            ElementType::Action if first.kind.authors_post() => Ok(()),
            ElementType::Action => Err(GrammarError::MustBeginWithPost),
            ElementType::Post => Err(GrammarError::MustEndWithAction),
        };
    }
    if first.element_type != ElementType::Post {
        return Err(GrammarError::MustBeginWithPost);
    }
    if last.element_type != ElementType::Action {
        return Err(GrammarError::MustEndWithAction);
    }
    let posts = &elements[..elements.len() - 1];
    if let Some(index) = posts.iter().position(|e| e.element_type == ElementType::Action) {
        return Err(GrammarError::ActionInPosts { index });
    }
    if let Some(index) = posts.iter().position(|e| !e.kind.authors_post()) {
        return Err(GrammarError::PostKind { index, kind: posts[index].kind });
    }
    Ok(())
}

fn check_targets(elements: &[Element]) -> Result<(), ThreadError> {
    for (index, e) in elements.iter().enumerate() {
        let ok = match e.element_type {
            ElementType::Post => e.target.is_none(),
            ElementType::Action if elements.len() == 1 => e.target.is_none(),
            ElementType::Action => e.target == Some(index - 1),
        };
        if !ok {
            return Err(ThreadError::Target { index });
        }
    }
    Ok(())
}

pub fn validate_thread(thread: &Thread) -> Result<(), ThreadError> {
    check_grammar(&thread.elements)?;
    check_targets(&thread.elements)
}

pub fn parse_thread(json: &str) -> Result<Thread, ThreadError> {
    let thread: Thread = serde_json::from_str(json)?;
    validate_thread(&thread)?;
    Ok(thread)
}

pub fn serialize_thread(thread: &Thread) -> String {
    serde_json::to_string(thread).expect("thread serialization is infallible")
}

impl fmt::Display for Thread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_thread(self))
    }
}
