use std::collections::{BTreeMap, HashMap};

use tracing::warn;

use super::tokenize::tokenize;

/// Smoothed inverse document frequencies over a tokenized corpus:
/// `idf(t) = ln((1 + D) / (1 + df(t))) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    documents: usize,
}

impl TfidfModel {
    pub fn fit<D: AsRef<[String]>>(docs: &[D]) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&String> = doc.as_ref().iter().collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t.clone()).or_default() += 1;
            }
        }
        let d = docs.len() as f64;
        let idf = df.values().map(|&f| ((1.0 + d) / (1.0 + f as f64)).ln() + 1.0).collect();
        let vocabulary = df.into_keys().enumerate().map(|(i, t)| (t, i)).collect();
        Self { vocabulary, idf, documents: docs.len() }
    }

    pub fn fit_texts<S: AsRef<str>>(texts: &[S]) -> Self {
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t.as_ref())).collect();
        Self::fit(&docs)
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    /// Raw term count times idf for every in-vocabulary term of `doc`.
    pub fn transform(&self, doc: &[String]) -> HashMap<usize, f64> {
        let mut out: HashMap<usize, f64> = HashMap::new();
        for t in doc {
            if let Some(&i) = self.vocabulary.get(t) {
                *out.entry(i).or_default() += self.idf[i];
            }
        }
        out
    }

    /// Mean TF-IDF vector over `docs`, returned as the `n` best terms by
    /// descending score with ties in lexicographic order.
    pub fn top_terms<D: AsRef<[String]>>(&self, docs: &[D], n: usize) -> Vec<(String, f64)> {
        if docs.is_empty() {
            return Vec::new();
        }
        let mut sums = vec![0.0; self.idf.len()];
        for doc in docs {
            for (i, s) in self.transform(doc.as_ref()) {
                sums[i] += s;
            }
        }
        let count = docs.len() as f64;
        let mut scored: Vec<(String, f64)> = self
            .vocabulary
            .iter()
            .filter(|&(_, &i)| sums[i] > 0.0)
            .map(|(t, &i)| (t.clone(), sums[i] / count))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(n);
        scored
    }
}

/// Top `n` mean-TF-IDF terms per cluster, each post one document, scored
/// against a model fitted on every cluster's posts together.
pub fn tfidf_top_terms<S: AsRef<str>>(
    cluster_corpora: &BTreeMap<u32, Vec<S>>,
    n: usize,
) -> BTreeMap<u32, Vec<(String, f64)>> {
    let tokenized: BTreeMap<u32, Vec<Vec<String>>> =
        cluster_corpora.iter().map(|(&c, docs)| (c, docs.iter().map(|d| tokenize(d.as_ref())).collect())).collect();
    let all: Vec<&Vec<String>> = tokenized.values().flatten().collect();
    let model = TfidfModel::fit(&all.iter().map(|d| d.as_slice()).collect::<Vec<_>>());
    tokenized
        .into_iter()
        .map(|(c, docs)| {
            if docs.is_empty() {
                warn!(cluster = c, "empty cluster corpus");
            }
            (c, model.top_terms(&docs, n))
        })
        .collect()
}
