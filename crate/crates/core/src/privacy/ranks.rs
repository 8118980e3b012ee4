use std::collections::HashMap;

/// Relative sequence positions replacing wall-clock timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankMap {
    ranks: HashMap<String, u64>,
}

impl RankMap {
    pub fn get(&self, uri: &str) -> Option<u64> {
        self.ranks.get(uri).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.ranks.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Ranks messages 1..N by `(created_at, uri)`. Equal timestamps are ordered
/// by uri bytes so the result does not depend on input order. A uri listed
/// more than once keeps its earliest timestamp.
pub fn obfuscate_timestamps<'a, I>(messages: I) -> RankMap
where
    I: IntoIterator<Item = (i64, &'a str)>,
{
    let mut earliest: HashMap<&'a str, i64> = HashMap::new();
    for (ts, uri) in messages {
        earliest.entry(uri).and_modify(|t| *t = (*t).min(ts)).or_insert(ts);
    }
    let mut order: Vec<(i64, &str)> = earliest.into_iter().map(|(u, t)| (t, u)).collect();
    order.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.as_bytes().cmp(b.1.as_bytes())));
    RankMap { ranks: order.into_iter().enumerate().map(|(i, (_, uri))| (uri.to_string(), i as u64 + 1)).collect() }
}
