//! Lexical divergence between two text corpora: n-gram coverage, Jaccard
//! similarity, smoothed KL divergence and TF-IDF term profiles.
//!
//! Tokens are lowercase alphanumeric runs; everything else separates tokens.
//! Bigrams never cross document boundaries. Coverage and Jaccard are taken
//! over n-gram types (unweighted).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{RadsError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NgramVocab {
    pub corpus_id: String,
    /// Space-joined lowercase n-gram to corpus-wide count.
    pub counts: BTreeMap<String, u64>,
}

impl NgramVocab {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn with_id(mut self, corpus_id: impl Into<String>) -> Self {
        self.corpus_id = corpus_id.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlConfig {
    pub epsilon: f64,
}

impl Default for KlConfig {
    fn default() -> Self {
        KlConfig { epsilon: 1e-9 }
    }
}

pub fn tokenize(doc: &str) -> Vec<String> {
    doc.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn extract_vocab<S: AsRef<str>>(documents: &[S], max_n: usize) -> Result<NgramVocab> {
    if !(1..=2).contains(&max_n) {
        return Err(RadsError::param(format!("max_n must be 1 or 2, got {max_n}")));
    }
    let mut counts = BTreeMap::new();
    for doc in documents {
        let tokens = tokenize(doc.as_ref());
        for t in &tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        if max_n == 2 {
            for pair in tokens.windows(2) {
                *counts.entry(format!("{} {}", pair[0], pair[1])).or_insert(0) += 1;
            }
        }
    }
    Ok(NgramVocab {
        corpus_id: String::new(),
        counts,
    })
}

fn keys(v: &NgramVocab) -> BTreeSet<&str> {
    v.counts.keys().map(String::as_str).collect()
}

/// Share of the target's n-gram types that also occur in the source.
pub fn coverage(target: &NgramVocab, source: &NgramVocab) -> Result<f64> {
    if target.is_empty() {
        return Err(RadsError::param("coverage of an empty target vocabulary is undefined"));
    }
    let shared = target.counts.keys().filter(|k| source.counts.contains_key(*k)).count();
    Ok(shared as f64 / target.len() as f64)
}

pub fn jaccard(a: &NgramVocab, b: &NgramVocab) -> Result<f64> {
    let (ka, kb) = (keys(a), keys(b));
    let union = ka.union(&kb).count();
    if union == 0 {
        return Err(RadsError::param(
            "Jaccard similarity of two empty vocabularies is undefined",
        ));
    }
    Ok(ka.intersection(&kb).count() as f64 / union as f64)
}

/// `KL(P || Q)` in nats, with both distributions smoothed by `epsilon` over
/// the combined vocabulary.
pub fn kl_divergence(p: &NgramVocab, q: &NgramVocab, cfg: &KlConfig) -> Result<f64> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(RadsError::param("KL smoothing epsilon must be positive"));
    }
    let vocab: BTreeSet<&str> = keys(p).union(&keys(q)).cloned().collect();
    if vocab.is_empty() {
        return Err(RadsError::param("KL divergence over an empty vocabulary is undefined"));
    }
    let eps = cfg.epsilon;
    let size = vocab.len() as f64;
    let (tp, tq) = (p.total() as f64 + eps * size, q.total() as f64 + eps * size);
    let count = |v: &NgramVocab, k: &str| v.counts.get(k).copied().unwrap_or(0) as f64;
    let kl = vocab
        .iter()
        .map(|k| {
            let pk = (count(p, k) + eps) / tp;
            let qk = (count(q, k) + eps) / tq;
            pk * (pk / qk).ln()
        })
        .sum::<f64>();
    Ok(kl.max(0.0))
}

/// Smoothed inverse document frequency.
pub fn idf(n_docs: usize, df: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Highest corpus-level TF-IDF unigrams: `sum_d tf(t, d) * idf(t)` with
/// `idf = ln((1 + N) / (1 + df)) + 1`. Ties are ordered by term.
pub fn tfidf_top<S: AsRef<str>>(corpus: &[S], k: usize) -> Result<Vec<(String, f64)>> {
    if corpus.is_empty() {
        return Err(RadsError::param("TF-IDF needs a non-empty corpus"));
    }
    if k == 0 {
        return Err(RadsError::param("k must be at least 1"));
    }
    let mut tf: BTreeMap<String, u64> = BTreeMap::new();
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for doc in corpus {
        let tokens = tokenize(doc.as_ref());
        for t in &tokens {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        for t in tokens.into_iter().collect::<BTreeSet<_>>() {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n = corpus.len();
    let mut scored: Vec<(String, f64)> = tf
        .into_iter()
        .map(|(t, count)| {
            let w = idf(n, df[&t]);
            (t, count as f64 * w)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusGapReport {
    /// Share of B's n-gram types found in A (transfer A -> B).
    pub coverage_ab: f64,
    /// Share of A's n-gram types found in B.
    pub coverage_ba: f64,
    pub jaccard: f64,
    pub kl_ab: f64,
    pub kl_ba: f64,
    pub tfidf_top_a: Vec<(String, f64)>,
    pub tfidf_top_b: Vec<(String, f64)>,
}

pub fn compare<S: AsRef<str>>(
    corpus_a: &[S],
    corpus_b: &[S],
    max_n: usize,
    kl: &KlConfig,
    top_k: usize,
) -> Result<CorpusGapReport> {
    let va = extract_vocab(corpus_a, max_n)?.with_id("a");
    let vb = extract_vocab(corpus_b, max_n)?.with_id("b");
    Ok(CorpusGapReport {
        coverage_ab: coverage(&vb, &va)?,
        coverage_ba: coverage(&va, &vb)?,
        jaccard: jaccard(&va, &vb)?,
        kl_ab: kl_divergence(&va, &vb, kl)?,
        kl_ba: kl_divergence(&vb, &va, kl)?,
        tfidf_top_a: tfidf_top(corpus_a, top_k)?,
        tfidf_top_b: tfidf_top(corpus_b, top_k)?,
    })
}

#[derive(Deserialize)]
struct DocLine {
    #[allow(dead_code)]
    id: String,
    text: String,
}

/// Loads a corpus from a directory (one UTF-8 file per document, read in
/// file-name order) or from a JSON-lines file of `{"id", "text"}` objects.
pub fn load_corpus(path: &Path) -> Result<Vec<String>> {
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        return files.iter().map(|f| Ok(fs::read_to_string(f)?)).collect();
    }
    let reader = BufReader::new(fs::File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocLine = serde_json::from_str(&line).map_err(|e| RadsError::Validation {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc.text);
    }
    Ok(docs)
}
