//! Tokenization, TFIDF weighting and cosine similarity.
//!
//! Raw weights are `ln(1 + tf) * ln(1 + N / df)` where `N` and `df` come from
//! a [`CorpusStats`]. Terms the corpus has never seen get no weight at all.
//! Vectors are L2-normalized, so [`cosine`] is a plain sparse dot product.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::porter;

/// Stemmed, lowercased tokens in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermSequence(Vec<String>);

impl TermSequence {
    pub fn terms(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Term frequencies of this sequence.
    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut tf = BTreeMap::new();
        for t in &self.0 {
            *tf.entry(t.as_str()).or_insert(0) += 1;
        }
        tf
    }
}

/// Splits text into stemmed terms, dropping stopwords before stemming.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenizer {
    stopwords: BTreeSet<String>,
}

impl Tokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stopwords<I, S>(stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = stopwords
            .into_iter()
            .map(|s| s.as_ref().trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        Self { stopwords }
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn tokenize(&self, text: &str) -> TermSequence {
        tokenize(text, &self.stopwords)
    }
}

/// Lowercases, splits on runs of non-alphanumeric characters, removes
/// stopwords and stems what is left.
///
/// Each token is stemmed until it stops changing, so every emitted term is a
/// fixed point of [`stem`] and re-tokenizing joined output is a no-op. For
/// almost every word that is a single Porter pass; `agreed` is one that needs
/// two (`agre`, then `agr`).
pub fn tokenize(text: &str, stopwords: &BTreeSet<String>) -> TermSequence {
    let lower = text.to_lowercase();
    let terms = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty() && !stopwords.contains(*tok))
        .map(stem_to_fixpoint)
        .collect();
    TermSequence(terms)
}

/// One pass of the Porter stemmer.
pub fn stem(term: &str) -> String {
    porter::stem(term)
}

fn stem_to_fixpoint(term: &str) -> String {
    let mut cur = stem(term);
    loop {
        let next = stem(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Document count and per-term document frequency for one column.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    doc_count: usize,
    df: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, usize)> {
        self.df.iter().map(|(t, &n)| (t.as_str(), n))
    }

    /// Inverse document frequency `ln(1 + N/df)`, or `None` for unseen terms.
    pub fn idf(&self, term: &str) -> Option<f64> {
        match self.df(term) {
            0 => None,
            df => Some(libm::log1p(self.doc_count as f64 / df as f64)),
        }
    }
}

pub fn build_stats<'a, I>(docs: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a TermSequence>,
{
    let mut stats = CorpusStats::default();
    for doc in docs {
        stats.doc_count += 1;
        let distinct: BTreeSet<&str> = doc.terms().iter().map(String::as_str).collect();
        for t in distinct {
            *stats.df.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    stats
}

/// Sparse term weights, sorted by term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermVector {
    weights: Vec<(String, f64)>,
    norm: f64,
}

impl TermVector {
    /// Builds a vector from raw weights. Zero weights are dropped and
    /// duplicate terms are summed.
    ///
    /// # Panics
    ///
    /// Panics on a negative or non-finite weight.
    pub fn from_weights<I, S>(weights: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, f64> = BTreeMap::new();
        for (t, w) in weights {
            assert!(w.is_finite() && w >= 0.0, "term weight must be finite and non-negative");
            if w > 0.0 {
                *map.entry(t.into()).or_insert(0.0) += w;
            }
        }
        let weights: Vec<(String, f64)> = map.into_iter().collect();
        let norm = libm::sqrt(weights.iter().map(|(_, w)| w * w).sum());
        Self { weights, norm }
    }

    pub fn weights(&self) -> &[(String, f64)] {
        &self.weights
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(&self) -> Self {
        if self.is_zero() {
            return Self::default();
        }
        let weights = self
            .weights
            .iter()
            .map(|(t, w)| (t.clone(), w / self.norm))
            .collect::<Vec<_>>();
        let norm = libm::sqrt(weights.iter().map(|(_, w)| w * w).sum());
        Self { weights, norm }
    }

    fn dot(&self, other: &Self) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.weights, &other.weights);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("cannot weight terms against an empty corpus")]
    EmptyCorpus,
}

/// TFIDF vector of `doc` under `stats`, L2-normalized.
pub fn vectorize(doc: &TermSequence, stats: &CorpusStats) -> Result<TermVector, TextError> {
    if stats.doc_count() == 0 {
        return Err(TextError::EmptyCorpus);
    }
    let raw = doc.counts().into_iter().filter_map(|(term, tf)| {
        stats
            .idf(term)
            .map(|idf| (term, libm::log1p(tf as f64) * idf))
    });
    Ok(TermVector::from_weights(raw).normalized())
}

/// Cosine similarity in `[0, 1]`; 0 when either side is the zero vector.
pub fn cosine(u: &TermVector, v: &TermVector) -> f64 {
    if u.is_zero() || v.is_zero() {
        return 0.0;
    }
    (u.dot(v) / (u.norm() * v.norm())).clamp(0.0, 1.0)
}
