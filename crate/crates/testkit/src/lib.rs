//! Generators, fixtures and brute-force oracles for the simpact test
//! suites. Written independently of the library internals.

use rand::seq::SliceRandom;
use rand::Rng;
use simpact_core::ingest::ActionKind;
use simpact_core::threads::{Element, ElementType, Thread};

pub const POST_KINDS: [ActionKind; 3] = [ActionKind::Post, ActionKind::Reply, ActionKind::Quote];

pub fn did(i: usize) -> String {
    format!("did:plc:fuzz{i:03}")
}

pub fn post(kind: ActionKind, author: &str, text: &str, rank: u64) -> Element {
    Element {
        element_type: ElementType::Post,
        kind,
        author: author.into(),
        text: Some(text.into()),
        rank,
        target: None,
    }
}

pub fn action(kind: ActionKind, author: &str, text: Option<&str>, rank: u64, target: Option<usize>) -> Element {
    Element {
        element_type: ElementType::Action,
        kind,
        author: author.into(),
        text: text.map(str::to_string),
        rank,
        target,
    }
}

fn words<R: Rng>(rng: &mut R) -> String {
    const W: [&str; 10] = ["vote", "carney", "housing", "debate", "poll", "ndp", "riding", "tax", "climate", "ballot"];
    (0..rng.gen_range(1..6)).map(|_| *W.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A grammatical thread with DID authors drawn from `authors` users.
pub fn random_thread<R: Rng>(rng: &mut R, authors: usize, max_posts: usize) -> Thread {
    let mut rank = rng.gen_range(1..50u64);
    let mut next_rank = |rng: &mut R| {
        rank += rng.gen_range(1..5);
        rank
    };
    let author = |rng: &mut R| did(rng.gen_range(0..authors));
    let elements = if rng.gen_bool(0.15) {
        let kind = *POST_KINDS.choose(rng).unwrap();
        let r = next_rank(rng);
        vec![action(kind, &author(rng), Some(&words(rng)), r, None)]
    } else {
        let n = rng.gen_range(1..=max_posts);
        let mut els: Vec<Element> = (0..n)
            .map(|i| {
                let kind = if i == 0 { ActionKind::Post } else { *POST_KINDS.choose(rng).unwrap() };
                let r = next_rank(rng);
                post(kind, &author(rng), &words(rng), r)
            })
            .collect();
        let kind = *ActionKind::ALL.choose(rng).unwrap();
        let text = kind.carries_text().then(|| words(rng));
        let r = next_rank(rng);
        els.push(action(kind, &author(rng), text.as_deref(), r, Some(n - 1)));
        els
    };
    Thread { thread_id: String::new(), cluster: rng.gen_range(0..4), elements, truncated: false }
}

/// Which grammar production an element sequence violates, if any.
pub fn violated_production(els: &[Element]) -> Option<&'static str> {
    let authoring = |k: ActionKind| matches!(k, ActionKind::Post | ActionKind::Reply | ActionKind::Quote);
    match els {
        [] => Some("⟨thread⟩"),
        [only] => match only.element_type {
            ElementType::Action if authoring(only.kind) => None,
            _ => Some("⟨thread⟩"),
        },
        [first, .., last] => {
            if first.element_type != ElementType::Post || last.element_type != ElementType::Action {
                Some("⟨thread⟩")
            } else if els[..els.len() - 1].iter().any(|e| e.element_type == ElementType::Action) {
                Some("⟨posts⟩")
            } else if els[..els.len() - 1].iter().any(|e| !authoring(e.kind)) {
                Some("⟨post⟩")
            } else {
                None
            }
        }
    }
}

/// Element orderings that break the grammar: shuffles of valid threads
/// and random type/kind sequences.
pub fn invalid_sequence<R: Rng>(rng: &mut R) -> Vec<Element> {
    loop {
        let els: Vec<Element> = if rng.gen_bool(0.5) {
            let mut t = random_thread(rng, 5, 6).elements;
            t.shuffle(rng);
            if rng.gen_bool(0.2) {
                t.pop();
            }
            t
        } else {
            (0..rng.gen_range(0..7))
                .map(|i| {
                    let kind = *ActionKind::ALL.choose(rng).unwrap();
                    if rng.gen_bool(0.5) {
                        post(kind, &did(i), "x", i as u64 + 1)
                    } else {
                        action(kind, &did(i), None, i as u64 + 1, None)
                    }
                })
                .collect()
        };
        if violated_production(&els).is_some() {
            return els;
        }
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum total squared distance over every labelling that gives each
/// cluster at least `min_size` points.
pub fn brute_force_min_cost(points: &[Vec<f64>], centroids: &[Vec<f64>], min_size: usize) -> f64 {
    let cost: Vec<Vec<f64>> = points.iter().map(|p| centroids.iter().map(|c| sq_dist(p, c)).collect()).collect();
    let mut search = Exhaustive { cost, min_size, counts: vec![0; centroids.len()], best: f64::INFINITY };
    search.visit(0, 0.0);
    search.best
}

struct Exhaustive {
    cost: Vec<Vec<f64>>,
    min_size: usize,
    counts: Vec<usize>,
    best: f64,
}

impl Exhaustive {
    fn visit(&mut self, i: usize, acc: f64) {
        let n = self.cost.len();
        let deficit: usize = self.counts.iter().map(|&c| self.min_size.saturating_sub(c)).sum();
        if deficit > n - i {
            return;
        }
        if i == n {
            self.best = self.best.min(acc);
            return;
        }
        for c in 0..self.counts.len() {
            self.counts[c] += 1;
            self.visit(i + 1, acc + self.cost[i][c]);
            self.counts[c] -= 1;
        }
    }
}

/// Mean silhouette by the textbook O(N²) definition with Euclidean
/// distance; singleton clusters score 0.
pub fn direct_silhouette(points: &[Vec<f64>], labels: &[u32]) -> f64 {
    let k = *labels.iter().max().unwrap() as usize + 1;
    let mut total = 0.0;
    for i in 0..points.len() {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for j in 0..points.len() {
            if i != j {
                sum[labels[j] as usize] += sq_dist(&points[i], &points[j]).sqrt();
                cnt[labels[j] as usize] += 1;
            }
        }
        let own = labels[i] as usize;
        if cnt[own] == 0 {
            continue;
        }
        let a = sum[own] / cnt[own] as f64;
        let b =
            (0..k).filter(|&c| c != own && cnt[c] > 0).map(|c| sum[c] / cnt[c] as f64).fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / points.len() as f64
}

pub const PII_CORPUS: &str = include_str!("../fixtures/pii_corpus.jsonl");

#[derive(Debug, serde::Deserialize)]
pub struct PiiEntity {
    pub category: String,
    pub value: String,
}

#[derive(Debug, serde::Deserialize)]
pub struct PiiCase {
    pub id: usize,
    pub text: String,
    pub expected: String,
    pub entities: Vec<PiiEntity>,
}

pub fn pii_cases() -> Vec<PiiCase> {
    PII_CORPUS.lines().map(|l| serde_json::from_str(l).expect("fixture line parses")).collect()
}

pub const ALICE: &str = "did:plc:alice";

/// Five DID-authored threads; `ALICE` writes four of their elements.
pub fn deletion_fixture() -> Vec<Thread> {
    let (bob, carol, dave) = ("did:plc:bob", "did:plc:carol", "did:plc:dave");
    let t =
        |cluster: u32, elements: Vec<Element>| Thread { thread_id: String::new(), cluster, elements, truncated: false };
    vec![
        // alice's post is not the one being acted on: only it is removed
        t(
            0,
            vec![
                post(ActionKind::Post, ALICE, "first take on the debate", 1),
                post(ActionKind::Reply, bob, "disagree", 2),
                action(ActionKind::Like, carol, None, 3, Some(1)),
            ],
        ),
        // alice wrote the post the reply targets
        t(
            0,
            vec![
                post(ActionKind::Post, ALICE, "polls open at 9", 4),
                action(ActionKind::Reply, bob, Some("thanks"), 5, Some(0)),
            ],
        ),
        // alice only wrote the terminal like
        t(1, vec![post(ActionKind::Post, bob, "housing plan", 6), action(ActionKind::Like, ALICE, None, 7, Some(0))]),
        t(
            1,
            vec![
                post(ActionKind::Post, carol, "riding results", 8),
                action(ActionKind::Repost, dave, None, 9, Some(0)),
            ],
        ),
        // standalone post by alice
        t(0, vec![action(ActionKind::Post, ALICE, Some("voted today"), 10, None)]),
    ]
}

/// Elements authored by `did`, counted on the DID-bearing threads.
pub fn authored_by(threads: &[Thread], did: &str) -> usize {
    threads.iter().flat_map(|t| &t.elements).filter(|e| e.author == did).count()
}
