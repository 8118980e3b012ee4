use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::event::RawEvent;

const DEFAULT_HANDLES: &str = include_str!("handles.txt");
const DEFAULT_PARTY: &str = include_str!("party.txt");
const DEFAULT_GENERAL: &str = include_str!("general.txt");

/// Election keyword lists: account handles, party identifiers/hashtags and
/// general political terms. Stored lowercased; handles without the `@`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordSet {
    pub handles: Vec<String>,
    pub party_terms: Vec<String>,
    pub general_terms: Vec<String>,
}

impl KeywordSet {
    /// The Canadian 2025 federal election lists (97 handles, 43 party terms,
    /// 11 general terms).
    pub fn election_2025() -> Self {
        Self::from_lists(DEFAULT_HANDLES, DEFAULT_PARTY, DEFAULT_GENERAL)
    }

    /// Builds a set from three newline-separated lists. Blank lines and
    /// `#`-prefixed comment lines are ignored.
    pub fn from_lists(handles: &str, party: &str, general: &str) -> Self {
        Self {
            handles: parse_list(handles).map(|h| h.trim_start_matches('@').to_string()).collect(),
            party_terms: parse_list(party).map(str::to_string).collect(),
            general_terms: parse_list(general).map(str::to_string).collect(),
        }
    }

    pub fn load(handles: &Path, party: &Path, general: &Path) -> std::io::Result<Self> {
        Ok(Self::from_lists(
            &std::fs::read_to_string(handles)?,
            &std::fs::read_to_string(party)?,
            &std::fs::read_to_string(general)?,
        ))
    }

    pub fn len(&self) -> usize {
        self.handles.len() + self.party_terms.len() + self.general_terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matcher(&self) -> KeywordMatcher {
        KeywordMatcher {
            handles: self.handles.iter().map(|h| h.to_lowercase()).collect(),
            terms: self.party_terms.iter().chain(&self.general_terms).map(|t| t.to_lowercase()).collect(),
        }
    }
}

fn parse_list(s: &str) -> impl Iterator<Item = &str> {
    s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Precomputed lookup tables for [`keyword_filter`].
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    handles: HashSet<String>,
    terms: HashSet<String>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_handle_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '.' | '-' | '_')
}

impl KeywordMatcher {
    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        if lower.split(|c: char| !is_word_char(c)).any(|w| !w.is_empty() && self.terms.contains(w)) {
            return true;
        }
        let found = handle_tokens(&lower).any(|h| self.handles.contains(h));
        found
    }
}

/// `@name.domain` tokens in `text`, without the `@` and without trailing
/// sentence punctuation.
fn handle_tokens(text: &str) -> impl Iterator<Item = &str> {
    let mut prev: Option<char> = None;
    text.char_indices().filter_map(move |(i, c)| {
        let before = prev;
        prev = Some(c);
        if c != '@' || before.is_some_and(|p| is_word_char(p) || p == '.') {
            return None;
        }
        let rest = &text[i + 1..];
        let end = rest.find(|c: char| !is_handle_char(c)).unwrap_or(rest.len());
        let token = rest[..end].trim_end_matches(['.', '-']);
        (!token.is_empty()).then_some(token)
    })
}

/// True iff the event's own text mentions at least one handle or term.
pub fn keyword_filter(event: &RawEvent, matcher: &KeywordMatcher) -> bool {
    event.text.as_deref().is_some_and(|t| matcher.matches(t))
}

/// Metadata-only language check; events without `langs` are rejected.
pub fn language_filter(event: &RawEvent, lang: &str) -> bool {
    event.langs.as_ref().is_some_and(|ls| ls.iter().any(|l| l.eq_ignore_ascii_case(lang)))
}

/// Drops every event by authors with fewer than `min_posts` authored posts
/// (post/reply/quote) in `events`.
pub fn prune_low_activity(events: Vec<RawEvent>, min_posts: usize) -> Vec<RawEvent> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for e in &events {
        if e.kind.authors_post() {
            *counts.entry(e.did.as_str()).or_default() += 1;
        }
    }
    let keep: HashSet<String> =
        counts.into_iter().filter(|&(_, n)| n >= min_posts).map(|(d, _)| d.to_string()).collect();
    events.into_iter().filter(|e| min_posts == 0 || keep.contains(&e.did)).collect()
}

/// Curation settings applied by [`curate`].
#[derive(Debug, Clone)]
pub struct CurationConfig {
    pub keywords: Option<KeywordMatcher>,
    pub lang: Option<String>,
    pub min_posts: usize,
}

/// Text events must pass the keyword and language filters; interaction
/// events pass through. Low-activity authors are pruned last.
pub fn curate(events: Vec<RawEvent>, config: &CurationConfig) -> Vec<RawEvent> {
    let filtered = events
        .into_iter()
        .filter(|e| {
            if !e.kind.carries_text() {
                return true;
            }
            let kw_ok = config.keywords.as_ref().is_none_or(|m| keyword_filter(e, m));
            let lang_ok = config.lang.as_deref().is_none_or(|l| language_filter(e, l));
            kw_ok && lang_ok
        })
        .collect();
    prune_low_activity(filtered, config.min_posts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ActionKind;
    use proptest::prelude::*;

    fn text_event(did: &str, uri: &str, text: &str) -> RawEvent {
        RawEvent {
            did: did.into(),
            uri: uri.into(),
            kind: ActionKind::Post,
            text: Some(text.into()),
            langs: Some(vec!["en".into()]),
            created_at: 0,
            subject_uri: None,
            subject_did: None,
            parent_uri: None,
            root_uri: None,
        }
    }

    fn like(did: &str, uri: &str) -> RawEvent {
        RawEvent { kind: ActionKind::Like, text: None, subject_uri: Some("x".into()), ..text_event(did, uri, "") }
    }

    // Reference matcher: lowercase substring scan with manual boundary checks.
    fn naive_term_match(text: &str, term: &str) -> bool {
        let lower = text.to_lowercase();
        let term = term.to_lowercase();
        let mut start = 0;
        while let Some(pos) = lower[start..].find(&term) {
            let at = start + pos;
            let end = at + term.len();
            let before_ok = lower[..at].chars().next_back().is_none_or(|c| !is_word_char(c));
            let after_ok = lower[end..].chars().next().is_none_or(|c| !is_word_char(c));
            if before_ok && after_ok {
                return true;
            }
            start = at + lower[at..].chars().next().unwrap().len_utf8();
        }
        false
    }

    #[test]
    fn default_list_sizes() {
        let kw = KeywordSet::election_2025();
        assert_eq!(kw.handles.len(), 97);
        assert_eq!(kw.party_terms.len(), 43);
        assert_eq!(kw.general_terms.len(), 11);
    }

    #[test]
    fn general_term_matches() {
        let m = KeywordSet::election_2025().matcher();
        assert!(keyword_filter(&text_event("d", "u", "thoughts on cdnpoli today"), &m));
        assert!(!keyword_filter(&text_event("d", "u", "nice weather"), &m));
    }

    #[test]
    fn case_insensitive_with_punctuation() {
        let m = KeywordSet::election_2025().matcher();
        let text = "CDNPOLI!!";
        assert!(naive_term_match(text, "cdnpoli"));
        assert!(keyword_filter(&text_event("d", "u", text), &m));
        // whole words only: "mayday" does not contain the term "may"
        assert!(!keyword_filter(&text_event("d", "u", "xcdnpolix mayday"), &m));
        assert!(keyword_filter(&text_event("d", "u", "#cdnpoli tonight"), &m));
    }

    #[test]
    fn handles_match_as_tokens() {
        let m = KeywordSet::election_2025().matcher();
        assert!(keyword_filter(&text_event("d", "u", "hi @LeahGazan.bsky.social."), &m));
        assert!(!keyword_filter(&text_event("d", "u", "hi @leahgazan.bsky.socialx"), &m));
        assert!(!keyword_filter(&text_event("d", "u", "mail foo@leahgazan.bsky.social"), &m));
    }

    #[test]
    fn absent_text_is_false() {
        let m = KeywordSet::election_2025().matcher();
        assert!(!keyword_filter(&like("d", "u"), &m));
    }

    #[test]
    fn language_rules() {
        let mut e = text_event("d", "u", "x");
        e.langs = Some(vec!["en".into(), "fr".into()]);
        assert!(language_filter(&e, "en"));
        e.langs = Some(vec!["fr".into()]);
        assert!(!language_filter(&e, "en"));
        e.langs = None;
        assert!(!language_filter(&e, "en"));
    }

    #[test]
    fn prune_removes_all_events_of_low_activity_user() {
        let mut events = vec![text_event("a", "p1", "x")];
        events.extend((0..10).map(|i| like("a", &format!("l{i}"))));
        assert!(prune_low_activity(events, 2).is_empty());
    }

    #[test]
    fn prune_keeps_boundary() {
        let events = vec![text_event("a", "p1", "x"), text_event("a", "p2", "y")];
        assert_eq!(prune_low_activity(events, 2).len(), 2);
        assert!(prune_low_activity(Vec::new(), 2).is_empty());
    }

    proptest! {
        #[test]
        fn matcher_agrees_with_naive_scan(
            words in proptest::collection::vec("[a-zA-Z]{1,8}|cdnpoli|CdnPoli|canada|election", 0..8),
            seps in proptest::collection::vec("[ !?.,#]{1,2}", 8)
        ) {
            let mut text = String::new();
            for (w, s) in words.iter().zip(&seps) {
                text.push_str(w);
                text.push_str(s);
            }
            let kw = KeywordSet::from_lists("", "", "cdnpoli\ncanada\nelection");
            let expected = ["cdnpoli", "canada", "election"].iter().any(|t| naive_term_match(&text, t));
            prop_assert_eq!(kw.matcher().matches(&text), expected);
        }

        #[test]
        fn keyword_filter_is_monotone(
            text in "[a-z ]{0,40}",
            base in proptest::collection::vec("[a-z]{2,5}", 0..4),
            extra in proptest::collection::vec("[a-z]{2,5}", 0..4)
        ) {
            let small = KeywordSet::from_lists("", "", &base.join("\n"));
            let mut all = base.clone();
            all.extend(extra);
            let large = KeywordSet::from_lists("", "", &all.join("\n"));
            if small.matcher().matches(&text) {
                prop_assert!(large.matcher().matches(&text));
            }
        }

        #[test]
        fn prune_is_idempotent(posts in proptest::collection::vec((0u8..5, any::<bool>()), 0..40), min in 0usize..4) {
            let events: Vec<RawEvent> = posts.iter().enumerate().map(|(i, &(user, is_post))| {
                let did = format!("u{user}");
                if is_post { text_event(&did, &format!("e{i}"), "t") } else { like(&did, &format!("e{i}")) }
            }).collect();
            let once = prune_low_activity(events.clone(), min);
            let twice = prune_low_activity(once.clone(), min);
            prop_assert_eq!(&once, &twice);
            // authors meeting the threshold keep every event
            for e in &events {
                let n = events.iter().filter(|x| x.did == e.did && x.kind.authors_post()).count();
                if n >= min {
                    prop_assert!(once.contains(e));
                }
            }
        }
    }
}
