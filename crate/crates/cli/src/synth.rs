//! Seeded synthetic event corpus with two latent communities, used for
//! demos and end-to-end tests. Every text event carries an election
//! keyword and every user posts at least twice, so the default curation
//! keeps most of it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simpact_core::ingest::{ActionKind, RawEvent};

const SHARED: [&str; 6] = ["election", "canada", "cdnpoli", "debate", "vote", "canadians"];
const TOPICS: [[&str; 10]; 2] = [
    ["carney", "liberal", "lpc", "climate", "housing", "transit", "childcare", "pharmacare", "tariffs", "trade"],
    ["poilievre", "conservative", "cpc", "taxes", "carbon", "freedom", "inflation", "pipeline", "crime", "budget"],
];
const FILLER: [&str; 12] =
    ["really", "today", "plan", "people", "watching", "agree", "wrong", "finally", "numbers", "town", "week", "news"];
const PII: [&str; 5] = [
    " email me at organizer.team@example.org",
    " details https://example.com/rally?id=42",
    " thanks @friend.bsky.social",
    " call +1 416 555 0199",
    " cc @organizer",
];

struct Gen {
    rng: ChaCha8Rng,
    clock: i64,
    seq: usize,
    events: Vec<RawEvent>,
    posts: [Vec<(String, String)>; 2],
}

impl Gen {
    fn tick(&mut self) -> i64 {
        self.clock += self.rng.gen_range(1..5_000_000);
        self.clock
    }

    fn uri(&mut self, did: &str, collection: &str) -> String {
        self.seq += 1;
        format!("at://{did}/app.bsky.{collection}/3s{:06}", self.seq)
    }

    fn text(&mut self, persona: usize) -> String {
        let words = self.rng.gen_range(4..9);
        let mut out = vec![*SHARED.choose(&mut self.rng).unwrap()];
        for _ in 0..words {
            let w = if self.rng.gen_bool(0.6) {
                TOPICS[persona].choose(&mut self.rng).unwrap()
            } else {
                FILLER.choose(&mut self.rng).unwrap()
            };
            out.push(w);
        }
        out.shuffle(&mut self.rng);
        let mut s = out.join(" ");
        if self.rng.gen_bool(0.1) {
            s.push_str(PII.choose(&mut self.rng).unwrap());
        }
        s
    }

    fn pick_post(&mut self, persona: usize) -> Option<(String, String)> {
        let side = if self.rng.gen_bool(0.75) { persona } else { 1 - persona };
        let pool = if self.posts[side].is_empty() { &self.posts[1 - side] } else { &self.posts[side] };
        pool.choose(&mut self.rng).cloned()
    }

    fn push(&mut self, did: &str, persona: usize, kind: ActionKind) {
        let created_at = self.tick();
        let lang = if self.rng.gen_bool(0.03) { "fr" } else { "en" };
        let mut e = RawEvent {
            did: did.to_string(),
            uri: String::new(),
            kind,
            text: None,
            langs: None,
            created_at,
            subject_uri: None,
            subject_did: None,
            parent_uri: None,
            root_uri: None,
        };
        let collection = match kind {
            ActionKind::Like | ActionKind::Unlike => "feed.like",
            ActionKind::Repost | ActionKind::Unrepost => "feed.repost",
            ActionKind::Follow | ActionKind::Unfollow => "graph.follow",
            ActionKind::Block | ActionKind::Unblock => "graph.block",
            _ => "feed.post",
        };
        e.uri = self.uri(did, collection);
        if kind.carries_text() {
            e.text = Some(self.text(persona));
            e.langs = Some(vec![lang.to_string()]);
        }
        if kind == ActionKind::Post {
            self.posts[persona].push((e.uri.clone(), did.to_string()));
            self.events.push(e);
            return;
        }
        let Some((target_uri, target_did)) = self.pick_post(persona) else {
            return;
        };
        if kind.is_user_directed() {
            if target_did == did {
                return;
            }
            e.subject_did = Some(target_did);
        } else if kind == ActionKind::Reply {
            e.parent_uri = Some(target_uri.clone());
            e.root_uri = Some(target_uri);
        } else {
            e.subject_uri = Some(target_uri);
        }
        if kind.authors_post() {
            self.posts[persona].push((e.uri.clone(), did.to_string()));
        }
        self.events.push(e);
    }
}

const MIX: [(ActionKind, u32); 13] = [
    (ActionKind::Post, 30),
    (ActionKind::Reply, 16),
    (ActionKind::Quote, 5),
    (ActionKind::Like, 22),
    (ActionKind::Repost, 8),
    (ActionKind::Follow, 5),
    (ActionKind::Block, 2),
    (ActionKind::Unlike, 2),
    (ActionKind::Unrepost, 1),
    (ActionKind::Unfollow, 2),
    (ActionKind::Unblock, 1),
    (ActionKind::PostUpdate, 3),
    (ActionKind::PostDelete, 3),
];

/// `n` events (at most) from `n / 10` users (at least 24), split evenly
/// between two communities with distinct vocabularies.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<RawEvent> {
    let users = (n / 10).max(24);
    let dids: Vec<(String, usize)> = (0..users).map(|i| (format!("did:plc:synth{}{:04}", i % 2, i), i % 2)).collect();
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        clock: 1_745_000_000_000_000,
        seq: 0,
        events: Vec::with_capacity(n),
        posts: [Vec::new(), Vec::new()],
    };
    for _ in 0..2 {
        for (did, p) in &dids {
            if g.events.len() < n {
                g.push(did, *p, ActionKind::Post);
            }
        }
    }
    let total: u32 = MIX.iter().map(|(_, w)| w).sum();
    let mut guard = 0;
    while g.events.len() < n && guard < n * 10 {
        guard += 1;
        let (did, p) = dids.choose(&mut g.rng).unwrap().clone();
        let mut roll = g.rng.gen_range(0..total);
        let kind = MIX
            .iter()
            .find(|(_, w)| {
                if roll < *w {
                    true
                } else {
                    roll -= w;
                    false
                }
            })
            .map(|(k, _)| *k)
            .unwrap();
        g.push(&did, p, kind);
    }
    g.events
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = synthetic_corpus(500, 7);
        assert_eq!(a.len(), 500);
        assert_eq!(a, synthetic_corpus(500, 7));
        assert_ne!(a, synthetic_corpus(500, 8));
        for e in &a {
            e.validate().unwrap();
        }
        let kinds: std::collections::HashSet<_> = a.iter().map(|e| e.kind).collect();
        assert_eq!(kinds.len(), 13);
    }
}
