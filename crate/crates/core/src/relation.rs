//! Named relations of text-valued tuples.
//!
//! Each column lazily carries its tokenized values, its [`CorpusStats`] and
//! the TFIDF vectors of its values under those stats. The caches are filled at
//! most once; adding a derived column never disturbs existing ones.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::OnceCell;

use crate::textpipe::{build_stats, vectorize, CorpusStats, TermSequence, TermVector, Tokenizer};

pub const PAPER: &str = "Paper";
pub const REVIEWER: &str = "Reviewer";
pub const PAPER_COLUMNS: [&str; 4] = ["id", "title", "abstract", "keywords"];
pub const REVIEWER_COLUMNS: [&str; 3] = ["name", "homepage", "papers"];

/// Word budget for the abstract taken from each reviewer paper.
pub const ABSTRACT_WORDS: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RelationError {
    #[error("duplicate column `{column}` in relation {relation}")]
    DuplicateColumn { relation: String, column: String },
    #[error("relation {relation} has no column `{column}`")]
    UnknownColumn { relation: String, column: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` already exists")]
    DuplicateRelation(String),
    #[error("tuple has {got} values but relation {relation} has {expected} columns")]
    Arity {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate paper id `{0}`")]
    DuplicateId(String),
    #[error("record {record}: field `{field}` must not be empty")]
    EmptyField { record: usize, field: &'static str },
}

/// One paper as submitted: id, title, abstract and its author keywords.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    pub abstract_text: String,
    /// Space-separated keyword list.
    pub keywords: String,
}

/// What is known about a reviewer's interests. Either source may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReviewerProfile {
    pub name: String,
    pub homepage: String,
    /// Concatenated abstracts of the reviewer's own papers.
    pub papers: String,
}

impl ReviewerProfile {
    /// Builds the papers source from full paper texts, keeping the first
    /// [`ABSTRACT_WORDS`] words of each.
    pub fn from_documents<S: AsRef<str>>(name: &str, homepage: &str, documents: &[S]) -> Self {
        let papers = documents
            .iter()
            .map(|d| extract_abstract(d.as_ref(), ABSTRACT_WORDS))
            .filter(|a| !a.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            name: name.to_string(),
            homepage: homepage.to_string(),
            papers,
        }
    }
}

/// First `n` whitespace-delimited words, joined by single spaces.
pub fn extract_abstract(doc: &str, n: usize) -> String {
    doc.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tuple {
    values: Vec<String>,
}

impl Tuple {
    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn get(&self, column: usize) -> &str {
        &self.values[column]
    }
}

#[derive(Debug, Default)]
struct ColumnCache {
    terms: OnceCell<Vec<TermSequence>>,
    stats: OnceCell<CorpusStats>,
    vectors: OnceCell<Vec<TermVector>>,
}

#[derive(Debug)]
pub struct Relation {
    name: String,
    columns: Vec<String>,
    tuples: Vec<Tuple>,
    tokenizer: Tokenizer,
    caches: Vec<ColumnCache>,
}

impl Clone for Relation {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            columns: self.columns.clone(),
            tuples: self.tuples.clone(),
            tokenizer: self.tokenizer.clone(),
            caches: self.columns.iter().map(|_| ColumnCache::default()).collect(),
        }
    }
}

impl Relation {
    pub fn new<S: AsRef<str>>(name: &str, columns: &[S]) -> Result<Self, RelationError> {
        let mut rel = Self {
            name: name.to_string(),
            columns: Vec::new(),
            tuples: Vec::new(),
            tokenizer: Tokenizer::new(),
            caches: Vec::new(),
        };
        for c in columns {
            let c = c.as_ref();
            if rel.find_column(c).is_some() {
                return Err(RelationError::DuplicateColumn {
                    relation: name.to_string(),
                    column: c.to_string(),
                });
            }
            rel.columns.push(c.to_string());
            rel.caches.push(ColumnCache::default());
        }
        Ok(rel)
    }

    /// Replaces the tokenizer and drops every cached column index.
    pub fn with_tokenizer(mut self, tokenizer: Tokenizer) -> Self {
        self.tokenizer = tokenizer;
        self.caches = self.columns.iter().map(|_| ColumnCache::default()).collect();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn push(&mut self, values: Vec<String>) -> Result<(), RelationError> {
        if values.len() != self.columns.len() {
            return Err(RelationError::Arity {
                relation: self.name.clone(),
                expected: self.columns.len(),
                got: values.len(),
            });
        }
        self.tuples.push(Tuple { values });
        for cache in &mut self.caches {
            *cache = ColumnCache::default();
        }
        Ok(())
    }

    /// Column position, matched ASCII case-insensitively.
    pub fn find_column(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(column))
    }

    pub fn column(&self, column: &str) -> Result<usize, RelationError> {
        self.find_column(column).ok_or_else(|| RelationError::UnknownColumn {
            relation: self.name.clone(),
            column: column.to_string(),
        })
    }

    pub fn value(&self, row: usize, column: usize) -> &str {
        self.tuples[row].get(column)
    }

    /// Appends a column whose value in each tuple is `derive(tuple)`.
    /// Does nothing if a column of that name already exists.
    pub fn add_derived_column<F>(&mut self, column: &str, derive: F) -> Result<(), RelationError>
    where
        F: Fn(&Tuple) -> String,
    {
        if self.find_column(column).is_some() {
            return Ok(());
        }
        for t in &mut self.tuples {
            let v = derive(t);
            t.values.push(v);
        }
        self.columns.push(column.to_string());
        self.caches.push(ColumnCache::default());
        Ok(())
    }

    pub fn column_terms(&self, column: usize) -> &[TermSequence] {
        self.caches[column].terms.get_or_init(|| {
            self.tuples
                .iter()
                .map(|t| self.tokenizer.tokenize(t.get(column)))
                .collect()
        })
    }

    /// Stats over every tuple's value in `column`; empty values count as
    /// empty documents.
    pub fn column_stats(&self, column: usize) -> &CorpusStats {
        self.caches[column]
            .stats
            .get_or_init(|| build_stats(self.column_terms(column)))
    }

    pub fn column_stats_by_name(&self, column: &str) -> Result<&CorpusStats, RelationError> {
        Ok(self.column_stats(self.column(column)?))
    }

    /// TFIDF vectors of the column's values under the column's own stats.
    /// Empty for an empty relation.
    pub fn column_vectors(&self, column: usize) -> &[TermVector] {
        self.caches[column].vectors.get_or_init(|| {
            let stats = self.column_stats(column);
            self.column_terms(column)
                .iter()
                .map(|doc| vectorize(doc, stats).unwrap_or_default())
                .collect()
        })
    }
}

/// Builds the `Paper` relation, keeping file order.
pub fn paper_relation(records: Vec<PaperRecord>, tokenizer: Tokenizer) -> Result<Relation, RelationError> {
    let mut rel = Relation::new(PAPER, &PAPER_COLUMNS)?.with_tokenizer(tokenizer);
    let mut seen = alloc::collections::BTreeSet::new();
    for (i, r) in records.into_iter().enumerate() {
        if r.id.is_empty() {
            return Err(RelationError::EmptyField { record: i + 1, field: "id" });
        }
        if !seen.insert(r.id.clone()) {
            return Err(RelationError::DuplicateId(r.id));
        }
        rel.push([r.id, r.title, r.abstract_text, r.keywords].into())?;
    }
    Ok(rel)
}

pub fn reviewer_relation(profiles: Vec<ReviewerProfile>, tokenizer: Tokenizer) -> Result<Relation, RelationError> {
    let mut rel = Relation::new(REVIEWER, &REVIEWER_COLUMNS)?.with_tokenizer(tokenizer);
    for (i, p) in profiles.into_iter().enumerate() {
        if p.name.is_empty() {
            return Err(RelationError::EmptyField { record: i + 1, field: "name" });
        }
        rel.push([p.name, p.homepage, p.papers].into())?;
    }
    Ok(rel)
}

/// The set of relations a query runs against. Names match case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct Store {
    relations: Vec<Relation>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, rel: Relation) -> Result<(), RelationError> {
        if self.find(rel.name()).is_some() {
            return Err(RelationError::DuplicateRelation(rel.name().to_string()));
        }
        self.relations.push(rel);
        Ok(())
    }

    pub fn find(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name().eq_ignore_ascii_case(name))
    }

    pub fn get(&self, name: &str) -> Result<&Relation, RelationError> {
        self.find(name)
            .ok_or_else(|| RelationError::UnknownRelation(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Relation, RelationError> {
        self.relations
            .iter_mut()
            .find(|r| r.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| RelationError::UnknownRelation(name.to_string()))
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn paper(id: &str, abs: &str) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            title: "t".into(),
            abstract_text: abs.into(),
            keywords: "k".into(),
        }
    }

    #[test]
    fn empty_paper_relation_has_four_columns() {
        let rel = paper_relation(vec![], Tokenizer::new()).unwrap();
        assert_eq!(rel.columns(), PAPER_COLUMNS);
        assert!(rel.is_empty());
    }

    #[test]
    fn papers_keep_file_order() {
        let rel = paper_relation(vec![paper("p2", "x"), paper("p1", "y")], Tokenizer::new()).unwrap();
        assert_eq!(rel.value(0, 0), "p2");
        assert_eq!(rel.value(1, 0), "p1");
        assert_eq!(rel.value(1, 2), "y");
    }

    #[test]
    fn duplicate_paper_id_rejected() {
        let err = paper_relation(vec![paper("p1", "x"), paper("p1", "y")], Tokenizer::new()).unwrap_err();
        assert_eq!(err, RelationError::DuplicateId("p1".into()));
        assert!(err.to_string().contains("p1"));
    }

    #[test]
    fn duplicate_columns_rejected() {
        assert!(Relation::new("R", &["a", "A"]).is_err());
    }

    #[test]
    fn extract_abstract_examples() {
        assert_eq!(extract_abstract("one two three four five", 300), "one two three four five");
        let long: Vec<String> = (0..301).map(|i| alloc::format!("w{i}")).collect();
        let cut = extract_abstract(&long.join(" "), 300);
        assert_eq!(cut.split(' ').count(), 300);
        assert!(cut.ends_with("w299"));
        assert_eq!(extract_abstract("a\tb\n\nc  d", 300), "a b c d");
    }

    #[test]
    fn reviewer_documents_are_concatenated() {
        let ten = "a b c d e f g h i j";
        let p = ReviewerProfile::from_documents("r", "", &[ten, ten]);
        assert_eq!(p.papers.split(' ').count(), 20);
        let h = ReviewerProfile::from_documents("r", "home page", &[] as &[&str]);
        assert_eq!(h.papers, "");
    }

    #[test]
    fn column_stats_count_all_tuples() {
        let rel = paper_relation(
            vec![paper("a", "q x"), paper("b", "x"), paper("c", "q"), paper("d", ""), paper("e", "y")],
            Tokenizer::new(),
        )
        .unwrap();
        let abs = rel.column("abstract").unwrap();
        assert_eq!(rel.column_stats(abs).doc_count(), 5);
        assert_eq!(rel.column_stats(abs).df("q"), 2);
        assert_eq!(rel.column_stats_by_name("KEYWORDS").unwrap().doc_count(), 5);
        assert!(matches!(
            rel.column_stats_by_name("body"),
            Err(RelationError::UnknownColumn { column, .. }) if column == "body"
        ));
    }

    #[test]
    fn derived_column_stats_match_build_stats() {
        let mut rel = paper_relation(vec![paper("a", "x y"), paper("b", "z")], Tokenizer::new()).unwrap();
        rel.add_derived_column("both", |t| alloc::format!("{} {}", t.get(2), t.get(3)))
            .unwrap();
        let col = rel.column("both").unwrap();
        let seqs: Vec<TermSequence> = ["x y k", "z k"].iter().map(|s| Tokenizer::new().tokenize(s)).collect();
        assert_eq!(*rel.column_stats(col), build_stats(&seqs));
    }

    #[test]
    fn store_lookup_is_case_insensitive() {
        let mut store = Store::new();
        store.insert(paper_relation(vec![], Tokenizer::new()).unwrap()).unwrap();
        assert!(store.get("paper").is_ok());
        assert!(store.insert(paper_relation(vec![], Tokenizer::new()).unwrap()).is_err());
        assert_eq!(store.get("Nope").unwrap_err(), RelationError::UnknownRelation("Nope".into()));
    }

    proptest! {
        #[test]
        fn extract_abstract_word_bound(text in "[a-z \t\n]{0,80}", n in 1usize..12) {
            prop_assert!(extract_abstract(&text, n).split_whitespace().count() <= n);
        }

        #[test]
        fn cached_vectors_match_fresh(abstracts in proptest::collection::vec("[a-d ]{0,12}", 1..6)) {
            let recs = abstracts.iter().enumerate().map(|(i, a)| paper(&alloc::format!("p{i}"), a)).collect();
            let rel = paper_relation(recs, Tokenizer::new()).unwrap();
            let col = rel.column("abstract").unwrap();
            let stats = rel.column_stats(col).clone();
            for (i, cached) in rel.column_vectors(col).iter().enumerate() {
                let fresh = vectorize(&Tokenizer::new().tokenize(rel.value(i, col)), &stats).unwrap();
                prop_assert_eq!(cached, &fresh);
            }
        }
    }
}
