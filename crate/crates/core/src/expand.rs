//! The recommendation query families.
//!
//! A run pairs a combination method with one reviewer source (`p`, `h` or
//! `ph`) and a non-empty set of paper sources drawn from abstract (`A`),
//! keywords (`K`) and title (`T`):
//!
//! - `concat` folds the selected paper fields into one derived column and
//!   compares it to the reviewer descriptor with a single `SIM`.
//! - `conjunct` adds one `SIM` per selected paper field.
//!
//! `ph` runs use the papers source as the descriptor and always carry one
//! extra `Reviewer.homepage SIM Paper.keywords` conjunct.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::query::{execute, ColumnRef, Projection, QueryError, QuerySpec, SimPredicate};
use crate::relation::{Relation, RelationError, Store, PAPER, REVIEWER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Concat,
    Conjunct,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Concat, Method::Conjunct];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Concat => "concat",
            Method::Conjunct => "conjunct",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = RunKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "concat" | "queryconcat" => Ok(Method::Concat),
            "conjunct" | "queryconjunct" => Ok(Method::Conjunct),
            _ => Err(RunKeyError::Method(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PaperSource {
    Abstract,
    Keywords,
    Title,
}

impl PaperSource {
    pub const ALL: [PaperSource; 3] = [PaperSource::Abstract, PaperSource::Keywords, PaperSource::Title];

    pub fn letter(self) -> char {
        match self {
            PaperSource::Abstract => 'A',
            PaperSource::Keywords => 'K',
            PaperSource::Title => 'T',
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            PaperSource::Abstract => "abstract",
            PaperSource::Keywords => "keywords",
            PaperSource::Title => "title",
        }
    }

    fn bit(self) -> u8 {
        match self {
            PaperSource::Abstract => 1,
            PaperSource::Keywords => 2,
            PaperSource::Title => 4,
        }
    }
}

/// A non-empty subset of `{A, K, T}`.
///
/// Ordered as the combinations are listed: A, K, T, AK, AT, KT, AKT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSet(u8);

impl SourceSet {
    pub const A: SourceSet = SourceSet(1);
    pub const K: SourceSet = SourceSet(2);
    pub const T: SourceSet = SourceSet(4);
    pub const AK: SourceSet = SourceSet(3);
    pub const AT: SourceSet = SourceSet(5);
    pub const KT: SourceSet = SourceSet(6);
    pub const AKT: SourceSet = SourceSet(7);

    /// All seven combinations in listing order.
    pub const ALL: [SourceSet; 7] = [
        SourceSet::A,
        SourceSet::K,
        SourceSet::T,
        SourceSet::AK,
        SourceSet::AT,
        SourceSet::KT,
        SourceSet::AKT,
    ];

    pub fn from_sources(sources: &[PaperSource]) -> Option<Self> {
        let bits = sources.iter().fold(0, |acc, s| acc | s.bit());
        (bits != 0).then_some(SourceSet(bits))
    }

    pub fn single(source: PaperSource) -> Self {
        SourceSet(source.bit())
    }

    pub fn contains(self, source: PaperSource) -> bool {
        self.0 & source.bit() != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in A, K, T order.
    pub fn sources(self) -> impl Iterator<Item = PaperSource> {
        PaperSource::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    pub fn with(self, source: PaperSource) -> Self {
        SourceSet(self.0 | source.bit())
    }

    /// `None` when removing `source` would leave the set empty.
    pub fn without(self, source: PaperSource) -> Option<Self> {
        let bits = self.0 & !source.bit();
        (bits != 0).then_some(SourceSet(bits))
    }

    pub fn position(self) -> usize {
        SourceSet::ALL.iter().position(|s| *s == self).expect("valid set")
    }
}

impl PartialOrd for SourceSet {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SourceSet {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.0.count_ones(), self.0).cmp(&(other.0.count_ones(), other.0))
    }
}

impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.sources() {
            write!(f, "{}", s.letter())?;
        }
        Ok(())
    }
}

impl FromStr for SourceSet {
    type Err = RunKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = 0u8;
        for c in s.chars() {
            let src = match c.to_ascii_uppercase() {
                'A' => PaperSource::Abstract,
                'K' => PaperSource::Keywords,
                'T' => PaperSource::Title,
                _ => return Err(RunKeyError::Sources(s.to_string())),
            };
            if bits & src.bit() != 0 {
                return Err(RunKeyError::Sources(s.to_string()));
            }
            bits |= src.bit();
        }
        if bits == 0 {
            return Err(RunKeyError::Sources(s.to_string()));
        }
        Ok(SourceSet(bits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReviewerSource {
    /// Abstracts of the reviewer's own papers.
    Papers,
    Homepage,
    /// Papers as descriptor plus the homepage/keywords conjunct.
    Both,
}

impl ReviewerSource {
    pub const ALL: [ReviewerSource; 3] = [ReviewerSource::Papers, ReviewerSource::Homepage, ReviewerSource::Both];

    pub fn as_str(self) -> &'static str {
        match self {
            ReviewerSource::Papers => "p",
            ReviewerSource::Homepage => "h",
            ReviewerSource::Both => "ph",
        }
    }
}

impl fmt::Display for ReviewerSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReviewerSource {
    type Err = RunKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "papers" => Ok(ReviewerSource::Papers),
            "h" | "homepage" => Ok(ReviewerSource::Homepage),
            "ph" | "hp" | "both" => Ok(ReviewerSource::Both),
            _ => Err(RunKeyError::ReviewerSource(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunKeyError {
    #[error("unknown method `{0}` (expected concat or conjunct)")]
    Method(String),
    #[error("unknown reviewer source `{0}` (expected p, h or ph)")]
    ReviewerSource(String),
    #[error("bad paper sources `{0}` (expected a non-empty combination of A, K, T)")]
    Sources(String),
    #[error("bad run key `{0}` (expected method/reviewer-source/sources, e.g. conjunct/ph/AKT)")]
    Format(String),
}

/// One recommendation run, written `conjunct/ph/AKT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunKey {
    pub method: Method,
    pub reviewer_source: ReviewerSource,
    pub paper_sources: SourceSet,
}

impl RunKey {
    pub fn new(method: Method, reviewer_source: ReviewerSource, paper_sources: SourceSet) -> Self {
        Self {
            method,
            reviewer_source,
            paper_sources,
        }
    }

    /// Short cell label as used in the source tables, e.g. `phAK`.
    pub fn cell_label(&self) -> String {
        format!("{}{}", self.reviewer_source, self.paper_sources)
    }
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.method, self.reviewer_source, self.paper_sources)
    }
}

impl FromStr for RunKey {
    type Err = RunKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('/');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(m), Some(r), Some(p), None) => Ok(RunKey::new(m.parse()?, r.parse()?, p.parse()?)),
            _ => Err(RunKeyError::Format(s.to_string())),
        }
    }
}

/// All 42 runs: method, then reviewer source, then paper sources in
/// listing order.
pub fn enumerate_runs() -> Vec<RunKey> {
    let mut out = Vec::with_capacity(42);
    for method in Method::ALL {
        for rs in ReviewerSource::ALL {
            for ps in SourceSet::ALL {
                out.push(RunKey::new(method, rs, ps));
            }
        }
    }
    out
}

/// Name of the derived column holding the given columns concatenated.
pub fn concat_column_name<S: AsRef<str>>(columns: &[S]) -> String {
    let mut name = String::from("concat");
    for c in columns {
        name.push('_');
        name.push_str(&c.as_ref().to_ascii_lowercase());
    }
    name
}

/// Adds (once) a column whose value is the selected columns' raw texts joined
/// by single spaces, and returns its name.
pub fn concat_columns<S: AsRef<str>>(rel: &mut Relation, columns: &[S]) -> Result<String, RelationError> {
    if columns.is_empty() {
        return Err(RelationError::UnknownColumn {
            relation: rel.name().to_string(),
            column: String::new(),
        });
    }
    let idx = columns
        .iter()
        .map(|c| rel.column(c.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let name = concat_column_name(columns);
    rel.add_derived_column(&name, |t| {
        idx.iter()
            .map(|&i| t.get(i))
            .filter(|v| !v.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    })?;
    Ok(name)
}

/// Reviewer column serving as the descriptor for a reviewer source. `ph`
/// uses the papers column; its homepage half enters as an extra conjunct.
pub fn reviewer_descriptor(source: ReviewerSource) -> &'static str {
    match source {
        ReviewerSource::Papers | ReviewerSource::Both => "papers",
        ReviewerSource::Homepage => "homepage",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedColumn {
    pub relation: String,
    pub name: String,
    pub parts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPlan {
    pub key: RunKey,
    pub query: QuerySpec,
    pub derived_columns: Vec<DerivedColumn>,
}

impl RunPlan {
    /// Creates the derived columns the query needs. Safe to call repeatedly.
    pub fn prepare(&self, store: &mut Store) -> Result<(), RelationError> {
        for d in &self.derived_columns {
            let rel = store.get_mut(&d.relation)?;
            concat_columns(rel, &d.parts)?;
        }
        Ok(())
    }

    /// Each reviewer's papers in ranked order, as produced by the plan's
    /// query. Reviewers with no scoring pair are absent. Call
    /// [`RunPlan::prepare`] first.
    pub fn rankings(&self, store: &Store) -> Result<BTreeMap<String, Vec<String>>, QueryError> {
        let result = execute(&self.query, store, None)?;
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for row in result.rows {
            let mut values = row.values.into_iter();
            let (Some(reviewer), Some(paper)) = (values.next(), values.next()) else {
                continue;
            };
            out.entry(reviewer).or_default().push(paper);
        }
        Ok(out)
    }
}

fn sim(reviewer_col: &str, paper_col: &str) -> SimPredicate {
    SimPredicate {
        left: ColumnRef::new(REVIEWER, reviewer_col),
        right: ColumnRef::new(PAPER, paper_col),
    }
}

pub fn build_plan(key: RunKey) -> RunPlan {
    let descriptor = reviewer_descriptor(key.reviewer_source);
    let mut derived_columns = Vec::new();
    let mut conjuncts: Vec<SimPredicate> = match key.method {
        Method::Conjunct => key
            .paper_sources
            .sources()
            .map(|s| sim(descriptor, s.column()))
            .collect(),
        Method::Concat if key.paper_sources.len() == 1 => {
            let only = key.paper_sources.sources().next().expect("non-empty");
            alloc::vec![sim(descriptor, only.column())]
        }
        Method::Concat => {
            let parts: Vec<String> = key.paper_sources.sources().map(|s| s.column().to_string()).collect();
            let name = concat_column_name(&parts);
            derived_columns.push(DerivedColumn {
                relation: PAPER.to_string(),
                name: name.clone(),
                parts,
            });
            alloc::vec![sim(descriptor, &name)]
        }
    };
    if key.reviewer_source == ReviewerSource::Both {
        conjuncts.push(sim("homepage", PaperSource::Keywords.column()));
    }
    RunPlan {
        key,
        query: QuerySpec {
            projections: alloc::vec![
                Projection::from(ColumnRef::new(REVIEWER, "name")),
                Projection::from(ColumnRef::new(PAPER, "id")),
            ],
            sources: (PAPER.to_string(), REVIEWER.to_string()),
            conjuncts,
        },
        derived_columns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse;
    use crate::relation::{paper_relation, PaperRecord};
    use crate::textpipe::Tokenizer;
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn enumerates_42_unique_runs() {
        let runs = enumerate_runs();
        assert_eq!(runs.len(), 42);
        assert_eq!(runs[0], RunKey::new(Method::Concat, ReviewerSource::Papers, SourceSet::A));
        assert_eq!(runs[6].paper_sources, SourceSet::AKT);
        assert_eq!(runs[41], "conjunct/ph/AKT".parse().unwrap());
        let set: BTreeSet<_> = runs.iter().collect();
        assert_eq!(set.len(), 42);
        let mut sorted = runs.clone();
        sorted.sort();
        assert_eq!(sorted, runs);
    }

    #[test]
    fn run_key_text_round_trip() {
        for k in enumerate_runs() {
            assert_eq!(k.to_string().parse::<RunKey>().unwrap(), k);
        }
        assert_eq!("conjunct/ph/TKA".parse::<RunKey>().unwrap().to_string(), "conjunct/ph/AKT");
        assert!("conjunct/ph".parse::<RunKey>().is_err());
        assert!("conjunct/x/A".parse::<RunKey>().is_err());
        assert!("conjunct/p/AA".parse::<RunKey>().is_err());
        assert!("conjunct/p/".parse::<RunKey>().is_err());
    }

    #[test]
    fn conjunct_akt_has_three_conjuncts() {
        let plan = build_plan("conjunct/p/AKT".parse().unwrap());
        let rights: Vec<_> = plan.query.conjuncts.iter().map(|c| c.right.column.as_str()).collect();
        assert_eq!(rights, ["abstract", "keywords", "title"]);
        assert!(plan.query.conjuncts.iter().all(|c| c.left.column == "papers"));
        assert!(plan.derived_columns.is_empty());
    }

    #[test]
    fn concat_uses_one_derived_column() {
        let plan = build_plan("concat/h/AK".parse().unwrap());
        assert_eq!(plan.query.conjuncts.len(), 1);
        assert_eq!(plan.query.conjuncts[0].left.column, "homepage");
        assert_eq!(plan.query.conjuncts[0].right.column, "concat_abstract_keywords");
        assert_eq!(plan.derived_columns[0].parts, ["abstract", "keywords"]);
    }

    #[test]
    fn ph_adds_homepage_keywords_conjunct() {
        let plan = build_plan("conjunct/ph/K".parse().unwrap());
        assert_eq!(
            plan.query.conjuncts,
            [sim("papers", "keywords"), sim("homepage", "keywords")]
        );
        let plan = build_plan("concat/ph/AKT".parse().unwrap());
        assert_eq!(plan.query.conjuncts.len(), 2);
    }

    #[test]
    fn conjunct_counts_follow_sources() {
        for k in enumerate_runs() {
            let plan = build_plan(k);
            let extra = usize::from(k.reviewer_source == ReviewerSource::Both);
            let base = match k.method {
                Method::Conjunct => k.paper_sources.len(),
                Method::Concat => 1,
            };
            assert_eq!(plan.query.conjuncts.len(), base + extra, "{k}");
            assert_eq!(parse(&plan.query.to_string()).unwrap(), plan.query, "{k}");
        }
    }

    #[test]
    fn single_source_plans_coincide() {
        for rs in ReviewerSource::ALL {
            for s in [SourceSet::A, SourceSet::K, SourceSet::T] {
                let a = build_plan(RunKey::new(Method::Concat, rs, s));
                let b = build_plan(RunKey::new(Method::Conjunct, rs, s));
                assert_eq!(a.query, b.query);
            }
        }
    }

    fn rel() -> Relation {
        paper_relation(
            vec![PaperRecord {
                id: "p1".into(),
                title: "learning".into(),
                abstract_text: "x y learning".into(),
                keywords: "z".into(),
            }],
            Tokenizer::new(),
        )
        .unwrap()
    }

    #[test]
    fn concat_columns_examples() {
        let mut r = rel();
        let single = concat_columns(&mut r, &["abstract"]).unwrap();
        assert_eq!(r.value(0, r.column(&single).unwrap()), "x y learning");
        let both = concat_columns(&mut r, &["abstract", "keywords"]).unwrap();
        assert_eq!(r.value(0, r.column(&both).unwrap()), "x y learning z");
        let at = concat_columns(&mut r, &["abstract", "title"]).unwrap();
        let col = r.column(&at).unwrap();
        assert_eq!(r.column_terms(col)[0].counts()["learn"], 2);
        assert!(concat_columns(&mut r, &["body"]).is_err());
        assert!(concat_columns::<&str>(&mut r, &[]).is_err());
    }

    #[test]
    fn descriptor_columns() {
        assert_eq!(reviewer_descriptor(ReviewerSource::Homepage), "homepage");
        assert_eq!(reviewer_descriptor(ReviewerSource::Papers), "papers");
        assert_eq!(reviewer_descriptor(ReviewerSource::Both), "papers");
    }

    proptest! {
        #[test]
        fn concat_order_does_not_change_vectors(a in "[a-d ]{0,10}", k in "[a-d ]{0,10}", t in "[a-d ]{0,10}") {
            let mut r = paper_relation(
                vec![
                    PaperRecord { id: "p1".into(), title: t.clone(), abstract_text: a.clone(), keywords: k.clone() },
                    PaperRecord { id: "p2".into(), title: k, abstract_text: t, keywords: a },
                ],
                Tokenizer::new(),
            ).unwrap();
            let x = concat_columns(&mut r, &["abstract", "keywords", "title"]).unwrap();
            let y = concat_columns(&mut r, &["title", "abstract", "keywords"]).unwrap();
            let (x, y) = (r.column(&x).unwrap(), r.column(&y).unwrap());
            prop_assert_eq!(r.column_vectors(x), r.column_vectors(y));
        }
    }
}
