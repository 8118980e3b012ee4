use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use tracing::{debug, info, warn};

use super::model::{Element, ElementType, Thread};
use crate::ingest::{ActionKind, RawEvent};
use crate::privacy::{obfuscate_timestamps, pseudonymize_thread, RankMap, SecretKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("referenced post {uri} is not in the corpus")]
    Dangling { uri: String },
    #[error("{did} has no post before the action")]
    NoPriorPost { did: String },
    #[error("parent chain of {uri} contains a cycle")]
    Cycle { uri: String },
    #[error("{kind} event {uri} lacks its reference field")]
    MissingReference { kind: ActionKind, uri: String },
}

/// Immutable index over every authored post (post, reply, quote).
#[derive(Debug, Default)]
pub struct PostStore<'a> {
    posts: HashMap<&'a str, &'a RawEvent>,
    by_author: HashMap<&'a str, Vec<(i64, &'a str)>>,
}

impl<'a> PostStore<'a> {
    pub fn new(events: &'a [RawEvent]) -> Self {
        let mut store = PostStore::default();
        for e in events.iter().filter(|e| e.kind.authors_post()) {
            store.posts.entry(e.uri.as_str()).or_insert(e);
            store.by_author.entry(e.did.as_str()).or_default().push(e.order_key());
        }
        for list in store.by_author.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        store
    }

    pub fn get(&self, uri: &str) -> Option<&'a RawEvent> {
        self.posts.get(uri).copied()
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// The most recent post by `did` strictly before `key` in
    /// `(created_at, uri)` order.
    pub fn latest_before(&self, did: &str, key: (i64, &str)) -> Option<&'a RawEvent> {
        let list = self.by_author.get(did)?;
        let idx = list.partition_point(|&k| k < key);
        let (_, uri) = *list.get(idx.checked_sub(1)?)?;
        self.get(uri)
    }
}

fn reference(event: &RawEvent) -> Option<&str> {
    match event.kind {
        ActionKind::Reply => event.parent_uri.as_deref(),
        _ => event.subject_uri.as_deref(),
    }
}

/// The post an action responds to. Standalone posts have none; a
/// user-directed action links to the target user's latest earlier post,
/// or none when that user has not posted yet.
pub fn link_action<'a>(event: &RawEvent, store: &PostStore<'a>) -> Result<Option<&'a RawEvent>, BuildError> {
    if event.kind == ActionKind::Post {
        return Ok(None);
    }
    if event.kind.is_user_directed() {
        let did = event
            .subject_did
            .as_deref()
            .ok_or_else(|| BuildError::MissingReference { kind: event.kind, uri: event.uri.clone() })?;
        return Ok(store.latest_before(did, event.order_key()));
    }
    let uri =
        reference(event).ok_or_else(|| BuildError::MissingReference { kind: event.kind, uri: event.uri.clone() })?;
    store.get(uri).map(Some).ok_or_else(|| BuildError::Dangling { uri: uri.to_string() })
}

/// A thread before ranking and pseudonymization.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreadDraft<'a> {
    pub posts: Vec<&'a RawEvent>,
    pub action: &'a RawEvent,
    pub truncated: bool,
}

impl<'a> ThreadDraft<'a> {
    pub fn events(&self) -> impl Iterator<Item = &'a RawEvent> + '_ {
        self.posts.iter().copied().chain(std::iter::once(self.action))
    }

    /// Materializes the draft with DID authors and the given ranks.
    pub fn to_thread(&self, ranks: &RankMap, cluster: u32) -> Thread {
        let rank = |e: &RawEvent| ranks.get(&e.uri).expect("every thread event is ranked");
        let mut elements: Vec<Element> = self
            .posts
            .iter()
            .map(|p| Element {
                element_type: ElementType::Post,
                kind: p.kind,
                author: p.did.clone(),
                text: p.text.clone(),
                rank: rank(p),
                target: None,
            })
            .collect();
        let target = elements.len().checked_sub(1);
        elements.push(Element {
            element_type: ElementType::Action,
            kind: self.action.kind,
            author: self.action.did.clone(),
            text: self.action.text.clone(),
            rank: rank(self.action),
            target,
        });
        Thread { thread_id: String::new(), cluster, elements, truncated: self.truncated }
    }
}

fn parent_of(post: &RawEvent) -> Option<&str> {
    match post.kind {
        ActionKind::Reply => post.parent_uri.as_deref(),
        ActionKind::Quote => post.subject_uri.as_deref(),
        _ => None,
    }
}

/// Walks parent (and quoted-post) references from the action's target up
/// to the root and returns the root-to-target chain plus the action.
pub fn build_thread<'a>(final_event: &'a RawEvent, store: &PostStore<'a>) -> Result<ThreadDraft<'a>, BuildError> {
    let target = match link_action(final_event, store) {
        Ok(Some(t)) => t,
        Ok(None) if final_event.kind == ActionKind::Post => {
            return Ok(ThreadDraft { posts: Vec::new(), action: final_event, truncated: false })
        }
        Ok(None) => {
            let did = final_event.subject_did.clone().unwrap_or_default();
            return Err(BuildError::NoPriorPost { did });
        }
        // a reply or quote whose parent was filtered out still carries its
        // own text, so it stands alone
        Err(BuildError::Dangling { .. }) if final_event.kind.authors_post() => {
            return Ok(ThreadDraft { posts: Vec::new(), action: final_event, truncated: true })
        }
        Err(e) => return Err(e),
    };
    let mut chain = vec![target];
    let mut seen: HashSet<&str> = HashSet::from([final_event.uri.as_str(), target.uri.as_str()]);
    let mut truncated = false;
    let mut cur = target;
    while let Some(parent_uri) = parent_of(cur) {
        if !seen.insert(parent_uri) {
            return Err(BuildError::Cycle { uri: parent_uri.to_string() });
        }
        match store.get(parent_uri) {
            Some(p) => {
                chain.push(p);
                cur = p;
            }
            None => {
                truncated = true;
                break;
            }
        }
    }
    chain.reverse();
    Ok(ThreadDraft { posts: chain, action: final_event, truncated })
}

/// Cluster of the terminal element's author, or none when that author was
/// not clustered.
pub fn label_thread(thread: &Thread, assignment: &HashMap<String, u32>) -> Option<u32> {
    assignment.get(&thread.terminal()?.author).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankScope {
    #[default]
    PerCluster,
    Global,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub threads: usize,
    pub truncated: usize,
    pub unresolved: usize,
    pub no_prior_post: usize,
    pub unclustered: usize,
    pub malformed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub shards: BTreeMap<u32, Vec<Thread>>,
    pub stats: BuildStats,
}

/// Builds pseudonymized, ranked thread shards from curated, PII-scrubbed
/// events. Every event is a final event; threads are labelled by the
/// terminal author's cluster and sorted by terminal rank within a shard.
pub fn build_dataset(
    events: &[RawEvent],
    assignment: &HashMap<String, u32>,
    key: &SecretKey,
    scope: RankScope,
) -> Dataset {
    let store = PostStore::new(events);
    let results: Vec<Result<(u32, ThreadDraft<'_>), BuildError>> = events
        .par_iter()
        .filter_map(|e| {
            let cluster = assignment.get(&e.did).copied();
            match (build_thread(e, &store), cluster) {
                (Ok(d), Some(c)) => Some(Ok((c, d))),
                (Ok(_), None) => None,
                (Err(err), _) => Some(Err(err)),
            }
        })
        .collect();

    let mut stats = BuildStats { unclustered: events.len() - results.len(), ..BuildStats::default() };
    let mut drafts: BTreeMap<u32, Vec<ThreadDraft<'_>>> = BTreeMap::new();
    for r in results {
        match r {
            Ok((c, d)) => drafts.entry(c).or_default().push(d),
            Err(BuildError::NoPriorPost { .. }) => stats.no_prior_post += 1,
            Err(err @ BuildError::Cycle { .. }) => {
                warn!(%err, "skipping malformed thread");
                stats.malformed += 1;
            }
            Err(err) => {
                debug!(%err, "dropping unresolved action");
                stats.unresolved += 1;
            }
        }
    }

    if stats.unresolved > 0 {
        warn!(count = stats.unresolved, "dropped actions whose referenced post is not in the corpus");
    }

    let global = (scope == RankScope::Global).then(|| {
        obfuscate_timestamps(drafts.values().flatten().flat_map(|d| d.events()).map(|e| (e.created_at, e.uri.as_str())))
    });

    let mut shards = BTreeMap::new();
    for (cluster, list) in drafts {
        let local;
        let ranks = match &global {
            Some(g) => g,
            None => {
                local =
                    obfuscate_timestamps(list.iter().flat_map(|d| d.events()).map(|e| (e.created_at, e.uri.as_str())));
                &local
            }
        };
        let mut threads: Vec<Thread> =
            list.par_iter().map(|d| pseudonymize_thread(key, d.to_thread(ranks, cluster))).collect();
        threads.sort_by(|a, b| {
            let ra = a.terminal().map(|e| e.rank);
            let rb = b.terminal().map(|e| e.rank);
            ra.cmp(&rb).then_with(|| a.thread_id.cmp(&b.thread_id))
        });
        stats.truncated += threads.iter().filter(|t| t.truncated).count();
        stats.threads += threads.len();
        shards.insert(cluster, threads);
    }
    info!(?stats, "threads built");
    Dataset { shards, stats }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(did: &str, uri: &str, kind: ActionKind, ts: i64) -> RawEvent {
        RawEvent {
            did: did.into(),
            uri: uri.into(),
            kind,
            text: kind.carries_text().then(|| format!("text of {uri}")),
            langs: None,
            created_at: ts,
            subject_uri: None,
            subject_did: None,
            parent_uri: None,
            root_uri: None,
        }
    }

    fn reply(did: &str, uri: &str, parent: &str, ts: i64) -> RawEvent {
        RawEvent { parent_uri: Some(parent.into()), ..ev(did, uri, ActionKind::Reply, ts) }
    }

    fn on(did: &str, uri: &str, kind: ActionKind, subject: &str, ts: i64) -> RawEvent {
        RawEvent { subject_uri: Some(subject.into()), ..ev(did, uri, kind, ts) }
    }

    fn at_user(did: &str, uri: &str, kind: ActionKind, subject: &str, ts: i64) -> RawEvent {
        RawEvent { subject_did: Some(subject.into()), ..ev(did, uri, kind, ts) }
    }

    fn uris(d: &ThreadDraft) -> Vec<String> {
        d.events().map(|e| e.uri.clone()).collect()
    }

    #[test]
    fn follow_links_to_latest_prior_post() {
        let events = vec![
            ev("b", "p3", ActionKind::Post, 3),
            ev("b", "p7", ActionKind::Post, 7),
            ev("b", "p11", ActionKind::Post, 11),
            at_user("a", "f9", ActionKind::Follow, "b", 9),
        ];
        let store = PostStore::new(&events);
        assert_eq!(link_action(&events[3], &store).unwrap().unwrap().uri, "p7");
        assert_eq!(uris(&build_thread(&events[3], &store).unwrap()), ["p7", "f9"]);
    }

    #[test]
    fn like_links_directly() {
        let events = vec![ev("b", "u5", ActionKind::Post, 1), on("a", "l", ActionKind::Like, "u5", 2)];
        let store = PostStore::new(&events);
        assert_eq!(link_action(&events[1], &store).unwrap().unwrap().uri, "u5");
    }

    #[test]
    fn block_without_posts_is_unlinked() {
        let events = vec![at_user("a", "b1", ActionKind::Block, "z", 2)];
        let store = PostStore::new(&events);
        assert!(link_action(&events[0], &store).unwrap().is_none());
        assert!(matches!(build_thread(&events[0], &store), Err(BuildError::NoPriorPost { .. })));
    }

    #[test]
    fn reply_chain() {
        let events = vec![
            ev("a", "p", ActionKind::Post, 1),
            reply("b", "r1", "p", 2),
            reply("c", "r2", "r1", 3),
            on("d", "like", ActionKind::Like, "r2", 4),
        ];
        let store = PostStore::new(&events);
        let d = build_thread(&events[3], &store).unwrap();
        assert_eq!(uris(&d), ["p", "r1", "r2", "like"]);
        assert!(!d.truncated);
    }

    #[test]
    fn standalone_post() {
        let events = vec![ev("a", "p", ActionKind::Post, 1)];
        let store = PostStore::new(&events);
        let d = build_thread(&events[0], &store).unwrap();
        assert!(d.posts.is_empty());
        let t = d.to_thread(&obfuscate_timestamps([(1, "p")]), 0);
        assert!(super::super::model::validate_thread(&t).is_ok());
    }

    #[test]
    fn quote_counts_as_parent() {
        let events =
            vec![ev("a", "p", ActionKind::Post, 1), on("b", "q", ActionKind::Quote, "p", 2), reply("c", "r", "q", 3)];
        let store = PostStore::new(&events);
        assert_eq!(uris(&build_thread(&events[2], &store).unwrap()), ["p", "q", "r"]);
    }

    #[test]
    fn missing_ancestor_truncates() {
        let events = vec![reply("b", "r1", "gone", 2), on("c", "l", ActionKind::Like, "r1", 3)];
        let store = PostStore::new(&events);
        let d = build_thread(&events[1], &store).unwrap();
        assert_eq!(uris(&d), ["r1", "l"]);
        assert!(d.truncated);
        // the reply itself stands alone
        let d = build_thread(&events[0], &store).unwrap();
        assert!(d.posts.is_empty() && d.truncated);
    }

    #[test]
    fn dangling_like_is_error() {
        let events = vec![on("c", "l", ActionKind::Like, "nowhere", 3)];
        let store = PostStore::new(&events);
        assert!(matches!(build_thread(&events[0], &store), Err(BuildError::Dangling { .. })));
    }

    #[test]
    fn cycle_detected() {
        let events = vec![reply("a", "x", "y", 1), reply("b", "y", "x", 2), on("c", "l", ActionKind::Like, "x", 3)];
        let store = PostStore::new(&events);
        assert!(matches!(build_thread(&events[2], &store), Err(BuildError::Cycle { .. })));
    }

    #[test]
    fn label_uses_terminal_author() {
        let events =
            vec![ev("a", "p", ActionKind::Post, 1), reply("b", "r", "p", 2), on("c", "l", ActionKind::Like, "r", 3)];
        let store = PostStore::new(&events);
        let ranks = obfuscate_timestamps(events.iter().map(|e| (e.created_at, e.uri.as_str())));
        let t = build_thread(&events[2], &store).unwrap().to_thread(&ranks, 0);
        let assignment: HashMap<String, u32> =
            [("a", 1), ("b", 2), ("c", 3)].iter().map(|&(d, c)| (d.to_string(), c)).collect();
        assert_eq!(label_thread(&t, &assignment), Some(3));
        let mut partial = assignment.clone();
        partial.remove("c");
        assert_eq!(label_thread(&t, &partial), None);
    }

    #[test]
    fn dataset_is_pseudonymized_and_ranked_per_cluster() {
        let events = vec![
            ev("a", "p1", ActionKind::Post, 100),
            reply("b", "r1", "p1", 200),
            on("a", "l1", ActionKind::Like, "r1", 300),
            ev("b", "p2", ActionKind::Post, 50),
        ];
        let assignment: HashMap<String, u32> = [("a".to_string(), 0), ("b".to_string(), 1)].into();
        let key = SecretKey::from_bytes(&[4; 32]).unwrap();
        let ds = build_dataset(&events, &assignment, &key, RankScope::PerCluster);
        assert_eq!(ds.stats.threads, 4);
        let c0 = &ds.shards[&0];
        // cluster 0 holds [p1] and [p1, r1, l1]: ranks 1..3 over {p1, r1, l1}
        let ranks: Vec<u64> = c0[1].elements.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, [1, 2, 3]);
        let json = serde_json::to_string(&ds.shards).unwrap();
        assert!(!json.contains("\"a\"") && !json.contains("\"b\""));
    }
}
