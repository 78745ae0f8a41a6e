//! A small similarity-join query language and its executor.
//!
//! ```text
//! SELECT Reviewer.name, Paper.id
//! FROM Paper AND Reviewer
//! WHERE Reviewer.papers SIM Paper.abstract
//! AND Reviewer.papers SIM Paper.keywords
//! ```
//!
//! Every tuple pair of the two source relations is scored by the product of
//! its conjunct cosines. The right-hand column of each `SIM` is the searched
//! collection: its corpus stats weight both sides of that conjunct.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::relation::{Relation, RelationError, Store};
use crate::textpipe::{cosine, vectorize, TermVector};

/// `Relation.column`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnRef {
    pub relation: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(relation: &str, column: &str) -> Self {
        Self {
            relation: relation.to_string(),
            column: column.to_string(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.relation, self.column)
    }
}

/// A SELECT item. An unqualified column is resolved at execution time
/// against whichever FROM relation has it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub relation: Option<String>,
    pub column: String,
}

impl From<ColumnRef> for Projection {
    fn from(c: ColumnRef) -> Self {
        Self {
            relation: Some(c.relation),
            column: c.column,
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.relation {
            Some(r) => write!(f, "{r}.{}", self.column),
            None => f.write_str(&self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimPredicate {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

impl fmt::Display for SimPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} SIM {}", self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub projections: Vec<Projection>,
    pub sources: (String, String),
    pub conjuncts: Vec<SimPredicate>,
}

impl fmt::Display for QuerySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, p) in self.projections.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "\nFROM {} AND {}\nWHERE ", self.sources.0, self.sources.1)?;
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str("\nAND ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl core::str::FromStr for QuerySpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Select,
    From,
    Where,
    And,
    Sim,
    Comma,
    Dot,
    Unexpected(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Select => f.write_str("SELECT"),
            Tok::From => f.write_str("FROM"),
            Tok::Where => f.write_str("WHERE"),
            Tok::And => f.write_str("AND"),
            Tok::Sim => f.write_str("SIM"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Unexpected(c) => write!(f, "`{c}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Vec<Spanned> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    word.push(d);
                    chars.next();
                    column += 1;
                } else {
                    break;
                }
            }
            match word.to_ascii_uppercase().as_str() {
                "SELECT" => Tok::Select,
                "FROM" => Tok::From,
                "WHERE" => Tok::Where,
                "AND" => Tok::And,
                "SIM" => Tok::Sim,
                _ => Tok::Ident(word),
            }
        } else {
            chars.next();
            column += 1;
            match c {
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                other => Tok::Unexpected(other),
            }
        };
        out.push(Spanned { tok, line: l, column: col });
    }
    out.push(Spanned { tok: Tok::End, line, column });
    out
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, expected: &str) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            expected: expected.to_string(),
            found: s.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn column_ref(&mut self) -> Result<ColumnRef, ParseError> {
        let relation = self.ident()?;
        self.expect(Tok::Dot, "`.`")?;
        let column = self.ident()?;
        Ok(ColumnRef { relation, column })
    }

    fn projection(&mut self) -> Result<Projection, ParseError> {
        let first = self.ident()?;
        if *self.peek() != Tok::Dot {
            return Ok(Projection {
                relation: None,
                column: first,
            });
        }
        self.pos += 1;
        let column = self.ident()?;
        Ok(Projection {
            relation: Some(first),
            column,
        })
    }

    fn predicate(&mut self) -> Result<SimPredicate, ParseError> {
        let left = self.column_ref()?;
        self.expect(Tok::Sim, "SIM")?;
        let right = self.column_ref()?;
        Ok(SimPredicate { left, right })
    }
}

/// Parses query text. Keywords are case-insensitive; whitespace and line
/// breaks are free-form.
pub fn parse(text: &str) -> Result<QuerySpec, ParseError> {
    let mut p = Parser { toks: lex(text), pos: 0 };
    p.expect(Tok::Select, "SELECT")?;
    let mut projections = alloc::vec![p.projection()?];
    while *p.peek() == Tok::Comma {
        p.pos += 1;
        projections.push(p.projection()?);
    }
    p.expect(Tok::From, "`.`, `,` or FROM")?;
    let first = p.ident()?;
    p.expect(Tok::And, "AND")?;
    let second = p.ident()?;
    p.expect(Tok::Where, "WHERE")?;
    let mut conjuncts = alloc::vec![p.predicate()?];
    while *p.peek() == Tok::And {
        p.pos += 1;
        conjuncts.push(p.predicate()?);
    }
    p.expect(Tok::End, "AND or end of input")?;
    Ok(QuerySpec {
        projections,
        sources: (first, second),
        conjuncts,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error("`{0}` is not one of the query's FROM relations")]
    NotASource(String),
    #[error("FROM names the same relation twice: `{0}`")]
    SelfJoin(String),
    #[error("SIM predicate `{0}` compares a relation with itself")]
    SameRelation(String),
    #[error("column `{0}` is in neither FROM relation")]
    UnresolvedColumn(String),
    #[error("column `{0}` is ambiguous; qualify it with a relation name")]
    AmbiguousColumn(String),
    #[error("limit must be at least 1")]
    ZeroLimit,
}

/// A scored tuple pair. `rows[0]` indexes the first FROM relation and
/// `rows[1]` the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub rows: [usize; 2],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub values: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub headers: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl RankedResult {
    /// `rank`, projected values, then the score to six decimals.
    pub fn to_tsv(&self) -> String {
        use core::fmt::Write;
        let mut out = String::from("rank");
        for h in &self.headers {
            out.push('\t');
            out.push_str(h);
        }
        out.push_str("\tscore\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{}", i + 1);
            for v in &row.values {
                out.push('\t');
                out.push_str(v);
            }
            let _ = writeln!(out, "\t{:.6}", row.score);
        }
        out
    }
}

struct BoundConjunct<'s> {
    /// Which FROM relation (0 or 1) the left column lives in.
    left_source: usize,
    left: Vec<TermVector>,
    right: &'s [TermVector],
}

impl BoundConjunct<'_> {
    fn score(&self, rows: [usize; 2]) -> f64 {
        let l = rows[self.left_source];
        let r = rows[1 - self.left_source];
        cosine(&self.left[l], &self.right[r])
    }
}

fn source_index(q: &QuerySpec, relation: &str) -> Result<usize, QueryError> {
    if relation.eq_ignore_ascii_case(&q.sources.0) {
        Ok(0)
    } else if relation.eq_ignore_ascii_case(&q.sources.1) {
        Ok(1)
    } else {
        Err(QueryError::NotASource(relation.to_string()))
    }
}

fn resolve_projection(q: &QuerySpec, rels: [&Relation; 2], p: &Projection) -> Result<(usize, usize), QueryError> {
    if let Some(r) = &p.relation {
        let s = source_index(q, r)?;
        return Ok((s, rels[s].column(&p.column)?));
    }
    match (rels[0].find_column(&p.column), rels[1].find_column(&p.column)) {
        (Some(c), None) => Ok((0, c)),
        (None, Some(c)) => Ok((1, c)),
        (Some(_), Some(_)) => Err(QueryError::AmbiguousColumn(p.column.clone())),
        (None, None) => Err(QueryError::UnresolvedColumn(p.column.clone())),
    }
}

fn bind<'s>(q: &QuerySpec, rels: [&'s Relation; 2], pred: &SimPredicate) -> Result<BoundConjunct<'s>, QueryError> {
    let ls = source_index(q, &pred.left.relation)?;
    let rs = source_index(q, &pred.right.relation)?;
    if ls == rs {
        return Err(QueryError::SameRelation(pred.to_string()));
    }
    let lcol = rels[ls].column(&pred.left.column)?;
    let rcol = rels[rs].column(&pred.right.column)?;
    let stats = rels[rs].column_stats(rcol);
    let left = rels[ls]
        .column_terms(lcol)
        .iter()
        .map(|doc| vectorize(doc, stats).unwrap_or_default())
        .collect();
    Ok(BoundConjunct {
        left_source: ls,
        left,
        right: rels[rs].column_vectors(rcol),
    })
}

/// Scores every tuple pair with a non-zero product, best first.
///
/// Equal scores are ordered by ascending tuple position in the searched
/// relation (right-hand side of the first conjunct), then in the other one.
pub fn score_pairs(q: &QuerySpec, store: &Store) -> Result<Vec<ScoredPair>, QueryError> {
    let rels = [store.get(&q.sources.0)?, store.get(&q.sources.1)?];
    if core::ptr::eq(rels[0], rels[1]) {
        return Err(QueryError::SelfJoin(q.sources.0.clone()));
    }
    for p in &q.projections {
        resolve_projection(q, rels, p)?;
    }
    let bound = q
        .conjuncts
        .iter()
        .map(|c| bind(q, rels, c))
        .collect::<Result<Vec<_>, _>>()?;
    let searched = 1 - bound[0].left_source;

    let mut pairs = Vec::new();
    for a in 0..rels[0].len() {
        'pair: for b in 0..rels[1].len() {
            let rows = [a, b];
            let mut score = 1.0;
            for c in &bound {
                score *= c.score(rows);
                if score == 0.0 {
                    continue 'pair;
                }
            }
            pairs.push(ScoredPair { rows, score });
        }
    }
    pairs.sort_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .unwrap_or(Ordering::Equal)
            .then(x.rows[searched].cmp(&y.rows[searched]))
            .then(x.rows[1 - searched].cmp(&y.rows[1 - searched]))
    });
    Ok(pairs)
}

/// Runs the query and keeps the best `limit` rows (all of them for `None`).
pub fn execute(q: &QuerySpec, store: &Store, limit: Option<usize>) -> Result<RankedResult, QueryError> {
    if limit == Some(0) {
        return Err(QueryError::ZeroLimit);
    }
    let rels = [store.get(&q.sources.0)?, store.get(&q.sources.1)?];
    let mut pairs = score_pairs(q, store)?;
    if let Some(n) = limit {
        pairs.truncate(n);
    }
    let projections = q
        .projections
        .iter()
        .map(|p| resolve_projection(q, rels, p))
        .collect::<Result<Vec<_>, QueryError>>()?;
    let rows = pairs
        .into_iter()
        .map(|pair| ResultRow {
            values: projections
                .iter()
                .map(|&(s, col)| rels[s].value(pair.rows[s], col).to_string())
                .collect(),
            score: pair.score,
        })
        .collect();
    Ok(RankedResult {
        headers: q.projections.iter().map(ToString::to_string).collect(),
        rows,
    })
}
