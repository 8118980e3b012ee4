//! Thread grammar, JSON codec and assembly from events.

mod build;
mod model;

pub use build::{
    build_dataset, build_thread, label_thread, link_action, BuildError, BuildStats, Dataset, PostStore, RankScope,
    ThreadDraft,
};
pub use model::{
    check_grammar, parse_thread, serialize_thread, validate_thread, Element, ElementType, GrammarError, Thread,
    ThreadError,
};
