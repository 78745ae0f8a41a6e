//! Precision@N, source-combination matrices, sign tests and the analyses
//! built on them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cf::Algorithm;
use crate::expand::{build_plan, Method, PaperSource, ReviewerSource, RunKey, SourceSet};
use crate::query::QueryError;
use crate::relation::{RelationError, Store};

pub use crate::synth::{generate_synthetic, SynthConfig, SynthCorpus, SynthError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no score for reviewer `{reviewer}` on run {run}")]
    MissingScore { reviewer: String, run: String },
    #[error("reviewer `{reviewer}` scored twice on run {run}")]
    DuplicateScore { reviewer: String, run: String },
    #[error("no scores for {method} at top {n}")]
    NoScores { method: Method, n: usize },
    #[error("missing mean precision for run {0}")]
    MissingRun(RunKey),
    #[error("paired samples differ in length: {0} vs {1}")]
    Unpaired(usize, usize),
    #[error("random baseline needs at least {n} papers, have {papers}")]
    TooFewPapers { papers: usize, n: usize },
    #[error("random baseline over an empty reviewer sample")]
    EmptySample,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Which recommender produced a ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunId {
    Content(RunKey),
    Cf(Algorithm),
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunId::Content(k) => k.fmt(f),
            RunId::Cf(a) => a.fmt(f),
        }
    }
}

/// Hits among the first `n` ranked ids divided by `n`. Lists shorter than `n`
/// count their missing tail as misses.
///
/// # Panics
/// If `n` is zero.
pub fn precision_at_n<S: AsRef<str>>(ranked: &[S], preferred: &BTreeSet<String>, n: usize) -> f64 {
    assert!(n >= 1, "precision cutoff must be at least 1");
    let hits = ranked
        .iter()
        .take(n)
        .filter(|id| preferred.contains(id.as_ref()))
        .count();
    hits as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionScore {
    pub reviewer: String,
    pub run: RunId,
    pub n: usize,
    pub value: f64,
}

impl PrecisionScore {
    pub fn evaluate<S: AsRef<str>>(
        reviewer: impl Into<String>,
        run: RunId,
        ranked: &[S],
        preferred: &BTreeSet<String>,
        n: usize,
    ) -> Self {
        Self {
            reviewer: reviewer.into(),
            run,
            n,
            value: precision_at_n(ranked, preferred, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReviewerSample {
    /// Sampled reviewers, ascending.
    pub chosen: Vec<String>,
    /// Ineligible reviewers met while filling the sample, in draw order.
    pub skipped: Vec<String>,
}

/// Draws up to `size` reviewers in a seeded random order, passing over any
/// that fail `eligible`; the sample is refilled from later draws. The result
/// does not depend on the order of `candidates`.
pub fn sample_reviewers<F>(candidates: &[String], size: usize, seed: u64, eligible: F) -> ReviewerSample
where
    F: Fn(&str) -> bool,
{
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut order: Vec<&String> = candidates.iter().collect();
    order.sort();
    order.dedup();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let mut out = ReviewerSample::default();
    for r in order {
        if out.chosen.len() == size {
            break;
        }
        if eligible(r) {
            out.chosen.push(r.clone());
        } else {
            out.skipped.push(r.clone());
        }
    }
    out.chosen.sort();
    out
}

/// Executes every run in `runs` once and scores each listed reviewer's
/// ranking at every cutoff. A reviewer absent from `preferences` prefers
/// nothing.
pub fn evaluate_runs(
    store: &mut Store,
    runs: &[RunKey],
    reviewers: &[String],
    preferences: &BTreeMap<String, BTreeSet<String>>,
    cutoffs: &[usize],
) -> Result<Vec<PrecisionScore>, RunError> {
    let none = BTreeSet::new();
    let empty: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(runs.len() * reviewers.len() * cutoffs.len());
    for &key in runs {
        let plan = build_plan(key);
        plan.prepare(store)?;
        let rankings = plan.rankings(store)?;
        for r in reviewers {
            let ranked = rankings.get(r).unwrap_or(&empty);
            let preferred = preferences.get(r).unwrap_or(&none);
            for &n in cutoffs {
                out.push(PrecisionScore::evaluate(r.clone(), RunId::Content(key), ranked, preferred, n));
            }
        }
    }
    Ok(out)
}

/// Mean precision of one (method, cutoff) over a reviewer sample, laid out
/// with reviewer sources as rows and paper-source combinations as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub method: Method,
    pub n: usize,
    pub reviewers: usize,
    cells: [[f64; 7]; 3],
}

impl ScoreMatrix {
    pub fn from_cells(method: Method, n: usize, reviewers: usize, cells: [[f64; 7]; 3]) -> Self {
        Self {
            method,
            n,
            reviewers,
            cells,
        }
    }

    pub fn get(&self, row: ReviewerSource, column: SourceSet) -> f64 {
        self.cells[row_index(row)][column.position()]
    }

    pub fn row(&self, row: ReviewerSource) -> &[f64; 7] {
        &self.cells[row_index(row)]
    }

    pub fn cells(&self) -> &[[f64; 7]; 3] {
        &self.cells
    }

    /// Every cell keyed by its run.
    pub fn entries(&self) -> impl Iterator<Item = (RunKey, f64)> + '_ {
        ReviewerSource::ALL.into_iter().flat_map(move |r| {
            SourceSet::ALL
                .into_iter()
                .map(move |s| (RunKey::new(self.method, r, s), self.get(r, s)))
        })
    }
}

fn row_index(row: ReviewerSource) -> usize {
    match row {
        ReviewerSource::Papers => 0,
        ReviewerSource::Homepage => 1,
        ReviewerSource::Both => 2,
    }
}

/// Averages the scores of every `method` run at cutoff `n`. The reviewer
/// sample is everyone who has at least one such score, and every one of them
/// must have all 21 runs.
pub fn build_matrix(results: &[PrecisionScore], n: usize, method: Method) -> Result<ScoreMatrix, EvalError> {
    let mut by_pair: BTreeMap<(&str, RunKey), f64> = BTreeMap::new();
    for s in results.iter().filter(|s| s.n == n) {
        let RunId::Content(key) = s.run else { continue };
        if key.method != method {
            continue;
        }
        if by_pair.insert((s.reviewer.as_str(), key), s.value).is_some() {
            return Err(EvalError::DuplicateScore {
                reviewer: s.reviewer.clone(),
                run: format!("{key}"),
            });
        }
    }
    let reviewers: BTreeSet<&str> = by_pair.keys().map(|(r, _)| *r).collect();
    if reviewers.is_empty() {
        return Err(EvalError::NoScores { method, n });
    }
    let mut cells = [[0.0; 7]; 3];
    for row in ReviewerSource::ALL {
        for col in SourceSet::ALL {
            let key = RunKey::new(method, row, col);
            let mut sum = 0.0;
            for &r in &reviewers {
                sum += by_pair.get(&(r, key)).ok_or_else(|| EvalError::MissingScore {
                    reviewer: r.into(),
                    run: format!("{key}"),
                })?;
            }
            cells[row_index(row)][col.position()] = sum / reviewers.len() as f64;
        }
    }
    Ok(ScoreMatrix::from_cells(method, n, reviewers.len(), cells))
}

/// Mean precision of `run` at cutoff `n`, or `None` if nothing was scored.
pub fn mean_precision(results: &[PrecisionScore], run: RunId, n: usize) -> Option<f64> {
    let values: Vec<f64> = results
        .iter()
        .filter(|s| s.run == run && s.n == n)
        .map(|s| s.value)
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTestResult {
    pub wins_i: usize,
    pub wins_j: usize,
    /// `None` when every pair tied.
    pub p_value: Option<f64>,
    pub significant: bool,
}

impl SignTestResult {
    pub fn is_applicable(&self) -> bool {
        self.p_value.is_some()
    }
}

/// Exact two-tailed sign test over paired per-reviewer precisions; ties are
/// dropped.
pub fn sign_test(qi: &[f64], qj: &[f64]) -> Result<SignTestResult, EvalError> {
    if qi.len() != qj.len() {
        return Err(EvalError::Unpaired(qi.len(), qj.len()));
    }
    let wins_i = qi.iter().zip(qj).filter(|(a, b)| a > b).count();
    let wins_j = qi.iter().zip(qj).filter(|(a, b)| a < b).count();
    let total = wins_i + wins_j;
    if total == 0 {
        return Ok(SignTestResult {
            wins_i,
            wins_j,
            p_value: None,
            significant: false,
        });
    }
    let p = (2.0 * binomial_upper_tail(total, wins_i.max(wins_j))).min(1.0);
    Ok(SignTestResult {
        wins_i,
        wins_j,
        p_value: Some(p),
        significant: p < 0.05,
    })
}

/// `P(Binomial(n, 1/2) >= k)`.
pub fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if n <= 1023 {
        // binomial coefficients stay finite in f64 up to n = 1029
        let mut c = 1.0f64;
        let mut tail = 0.0;
        for i in 1..=n {
            c *= (n + 1 - i) as f64 / i as f64;
            if i >= k {
                tail += c;
            }
        }
        return libm::ldexp(tail, -(n as i32));
    }
    let ln_half_n = -(n as f64) * core::f64::consts::LN_2;
    let ln_nf = libm::lgamma(n as f64 + 1.0);
    (k..=n)
        .map(|i| libm::exp(ln_nf - libm::lgamma(i as f64 + 1.0) - libm::lgamma((n - i) as f64 + 1.0) + ln_half_n))
        .sum::<f64>()
        .min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub row: ReviewerSource,
    /// Lowest-precision single paper source in the row.
    pub single_source: SourceSet,
    pub single: f64,
    pub multi: f64,
    /// Whole percent; `None` when the single-source cell is zero.
    pub percent: Option<i64>,
}

impl Improvement {
    pub fn label(&self) -> String {
        format!("{}{}", self.row, self.single_source)
    }
}

/// Gain from each row's worst single-source query to its all-source query.
pub fn improvement_report(matrix: &ScoreMatrix) -> Vec<Improvement> {
    ReviewerSource::ALL
        .into_iter()
        .map(|row| {
            let mut single_source = SourceSet::A;
            for s in [SourceSet::K, SourceSet::T] {
                if matrix.get(row, s) < matrix.get(row, single_source) {
                    single_source = s;
                }
            }
            let single = matrix.get(row, single_source);
            let multi = matrix.get(row, SourceSet::AKT);
            Improvement {
                row,
                single_source,
                single,
                multi,
                percent: percent_improvement(single, multi),
            }
        })
        .collect()
}

/// `(multi - single) / single` in whole percent.
pub fn percent_improvement(single: f64, multi: f64) -> Option<i64> {
    (single != 0.0).then(|| libm::round((multi - single) / single * 100.0) as i64)
}

/// A source whose contribution can be isolated by pairing runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImpactSource {
    Paper(PaperSource),
    /// `Papers` or `Homepage`; `Both` is never a single source.
    Reviewer(ReviewerSource),
}

impl ImpactSource {
    pub const ALL: [ImpactSource; 5] = [
        ImpactSource::Paper(PaperSource::Abstract),
        ImpactSource::Paper(PaperSource::Keywords),
        ImpactSource::Paper(PaperSource::Title),
        ImpactSource::Reviewer(ReviewerSource::Papers),
        ImpactSource::Reviewer(ReviewerSource::Homepage),
    ];
}

impl fmt::Display for ImpactSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImpactSource::Paper(p) => write!(f, "{}", p.letter()),
            ImpactSource::Reviewer(r) => r.fmt(f),
        }
    }
}

impl FromStr for ImpactSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ImpactSource::ALL
            .into_iter()
            .find(|src| format!("{src}").eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown source `{s}` (expected A, K, T, p or h)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactPoint {
    pub exclude: RunKey,
    pub include: RunKey,
    pub exclude_precision: f64,
    pub include_precision: f64,
}

impl ImpactPoint {
    pub fn label(&self) -> String {
        format!("{} -> {}", self.exclude, self.include)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceImpact {
    pub include_wins: usize,
    pub exclude_wins: usize,
    pub ties: usize,
    pub points: Vec<ImpactPoint>,
}

/// Every (run without `source`, same run with it) pair among the methods
/// present in `means`.
pub fn impact_pairs(methods: &BTreeSet<Method>, source: ImpactSource) -> Vec<(RunKey, RunKey)> {
    let mut pairs = Vec::new();
    for &m in methods {
        match source {
            ImpactSource::Paper(p) => {
                for r in ReviewerSource::ALL {
                    for s in SourceSet::ALL.into_iter().filter(|s| !s.contains(p)) {
                        pairs.push((RunKey::new(m, r, s), RunKey::new(m, r, s.with(p))));
                    }
                }
            }
            ImpactSource::Reviewer(r) => {
                let other = match r {
                    ReviewerSource::Papers => ReviewerSource::Homepage,
                    _ => ReviewerSource::Papers,
                };
                for s in SourceSet::ALL {
                    pairs.push((RunKey::new(m, other, s), RunKey::new(m, ReviewerSource::Both, s)));
                }
            }
        }
    }
    pairs
}

/// Counts how often adding `source` raises or lowers mean precision.
/// `means` holds one cutoff's mean precision per run.
pub fn source_impact(means: &BTreeMap<RunKey, f64>, source: ImpactSource) -> Result<SourceImpact, EvalError> {
    let methods: BTreeSet<Method> = means.keys().map(|k| k.method).collect();
    let mut out = SourceImpact::default();
    for (exclude, include) in impact_pairs(&methods, source) {
        let x = *means.get(&exclude).ok_or(EvalError::MissingRun(exclude))?;
        let y = *means.get(&include).ok_or(EvalError::MissingRun(include))?;
        match y.partial_cmp(&x) {
            Some(core::cmp::Ordering::Greater) => out.include_wins += 1,
            Some(core::cmp::Ordering::Less) => out.exclude_wins += 1,
            _ => out.ties += 1,
        }
        out.points.push(ImpactPoint {
            exclude,
            include,
            exclude_precision: x,
            include_precision: y,
        });
    }
    Ok(out)
}

/// Expected precision of picking papers uniformly without replacement: the
/// mean of `|preferred| / papers` over reviewers. It does not depend on `n`.
pub fn random_baseline(preferred_sizes: &[usize], papers: usize, n: usize) -> Result<f64, EvalError> {
    if papers < n || papers == 0 {
        return Err(EvalError::TooFewPapers { papers, n });
    }
    if preferred_sizes.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let sum: f64 = preferred_sizes.iter().map(|&k| k as f64 / papers as f64).sum();
    Ok(sum / preferred_sizes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precision_examples() {
        let ranked: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        assert_eq!(precision_at_n(&ranked, &set(&["p3", "p9", "zz"]), 10), 0.2);
        assert_eq!(precision_at_n(&["a", "b", "c", "d"], &set(&["a", "b", "c", "d"]), 10), 0.4);
        assert_eq!(precision_at_n::<&str>(&[], &set(&["a"]), 10), 0.0);
        assert_eq!(precision_at_n(&["a", "b"], &set(&["b"]), 1), 0.0);
    }

    #[test]
    #[should_panic]
    fn precision_rejects_zero_cutoff() {
        precision_at_n(&["a"], &set(&["a"]), 0);
    }

    fn full_scores(reviewer: &str, method: Method, n: usize, value: impl Fn(RunKey) -> f64) -> Vec<PrecisionScore> {
        crate::expand::enumerate_runs()
            .into_iter()
            .filter(|k| k.method == method)
            .map(|k| PrecisionScore {
                reviewer: reviewer.into(),
                run: RunId::Content(k),
                n,
                value: value(k),
            })
            .collect()
    }

    #[test]
    fn matrix_means_and_shape() {
        let mut scores = full_scores("r1", Method::Conjunct, 10, |_| 0.2);
        scores.extend(full_scores("r2", Method::Conjunct, 10, |_| 0.4));
        scores.extend(full_scores("r1", Method::Concat, 10, |_| 1.0));
        scores.extend(full_scores("r1", Method::Conjunct, 30, |_| 1.0));
        let m = build_matrix(&scores, 10, Method::Conjunct).unwrap();
        assert_eq!(m.reviewers, 2);
        assert_eq!(m.cells().len(), 3);
        assert!(m.cells().iter().all(|row| row.len() == 7 && row.iter().all(|&c| (c - 0.3).abs() < 1e-12)));
        assert_eq!(m.entries().count(), 21);

        let single = build_matrix(&scores, 10, Method::Concat).unwrap();
        assert_eq!(single.get(ReviewerSource::Homepage, SourceSet::KT), 1.0);
    }

    #[test]
    fn matrix_rejects_missing_pair() {
        let mut scores = full_scores("r1", Method::Conjunct, 10, |_| 0.2);
        scores.extend(full_scores("r2", Method::Conjunct, 10, |_| 0.4));
        let gone = scores.iter().position(|s| s.reviewer == "r2" && s.run == RunId::Content("conjunct/h/KT".parse().unwrap())).unwrap();
        scores.remove(gone);
        let err = build_matrix(&scores, 10, Method::Conjunct).unwrap_err();
        assert_eq!(err, EvalError::MissingScore { reviewer: "r2".into(), run: "conjunct/h/KT".into() });
        assert!(matches!(build_matrix(&scores, 30, Method::Conjunct), Err(EvalError::NoScores { .. })));
    }

    // Independent exact tail: integer binomial sums.
    fn exact_two_tailed(a: usize, b: usize) -> f64 {
        let n = (a + b) as u64;
        let k = a.max(b) as u64;
        let mut c = 1u64;
        let mut tail = u64::from(k == 0);
        for i in 1..=n {
            c = c * (n + 1 - i) / i;
            if i >= k {
                tail += c;
            }
        }
        (2.0 * tail as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn sign_test_examples() {
        let qi = [0.5; 10];
        let mut qj = [0.1; 10];
        qj[0] = 0.9;
        let r = sign_test(&qi, &qj).unwrap();
        assert_eq!((r.wins_i, r.wins_j), (9, 1));
        assert!((r.p_value.unwrap() - 2.0 * 11.0 / 1024.0).abs() < 1e-15);
        assert!((r.p_value.unwrap() - 0.02148).abs() < 1e-5);
        assert!(r.significant);

        let r = sign_test(&[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.5; 10]).unwrap();
        assert_eq!(r.p_value, Some(1.0));
        assert!(!r.significant);

        let r = sign_test(&[0.3, 0.2], &[0.3, 0.2]).unwrap();
        assert!(!r.is_applicable());
        assert!(sign_test(&[0.1], &[]).is_err());
    }

    #[test]
    fn sign_test_matches_integer_oracle_up_to_twenty() {
        for n in 1..=20usize {
            for a in 0..=n {
                let qi: Vec<f64> = (0..n).map(|i| if i < a { 1.0 } else { 0.0 }).collect();
                let qj = vec![0.5; n];
                let r = sign_test(&qi, &qj).unwrap();
                assert!((r.p_value.unwrap() - exact_two_tailed(a, n - a)).abs() < 1e-12, "{a}-{}", n - a);
            }
        }
    }

    #[test]
    fn binomial_tail_large_n_agrees_across_branches() {
        // at the switchover the log-space path should agree with the direct sum
        for k in [480usize, 512, 540] {
            let direct = binomial_upper_tail(1023, k);
            let ln_half_n = -1023.0 * core::f64::consts::LN_2;
            let ln_nf = libm::lgamma(1024.0);
            let logspace: f64 = (k..=1023)
                .map(|i| libm::exp(ln_nf - libm::lgamma(i as f64 + 1.0) - libm::lgamma((1023 - i) as f64 + 1.0) + ln_half_n))
                .sum();
            assert!((direct - logspace).abs() < 1e-9, "{k}");
        }
        let p = binomial_upper_tail(5000, 2500);
        assert!(p > 0.5 && p < 0.52);
    }

    const TABLE1: [[[f64; 7]; 3]; 2] = [
        [
            [0.248, 0.260, 0.234, 0.266, 0.274, 0.308, 0.330],
            [0.210, 0.284, 0.232, 0.288, 0.270, 0.320, 0.332],
            [0.334, 0.304, 0.332, 0.312, 0.342, 0.286, 0.374],
        ],
        [
            [0.194, 0.201, 0.177, 0.198, 0.195, 0.220, 0.232],
            [0.169, 0.217, 0.183, 0.226, 0.199, 0.232, 0.232],
            [0.245, 0.219, 0.233, 0.224, 0.241, 0.211, 0.249],
        ],
    ];

    #[test]
    fn improvement_reproduces_published_table() {
        let top10 = improvement_report(&ScoreMatrix::from_cells(Method::Conjunct, 10, 50, TABLE1[0]));
        let top30 = improvement_report(&ScoreMatrix::from_cells(Method::Conjunct, 30, 50, TABLE1[1]));
        let got: Vec<(String, Option<i64>)> = top10.iter().chain(&top30).map(|i| (i.label(), i.percent)).collect();
        let want = [("pT", 41), ("hA", 58), ("phK", 23), ("pT", 31), ("hA", 37), ("phK", 14)];
        assert_eq!(got, want.map(|(l, p)| (l.to_string(), Some(p))));
    }

    #[test]
    fn improvement_edge_cases() {
        assert_eq!(percent_improvement(0.3, 0.3), Some(0));
        assert_eq!(percent_improvement(0.0, 0.3), None);
        let m = ScoreMatrix::from_cells(Method::Conjunct, 10, 1, [[0.0; 7]; 3]);
        assert!(improvement_report(&m).iter().all(|i| i.percent.is_none()));
    }

    fn means(f: impl Fn(RunKey) -> f64) -> BTreeMap<RunKey, f64> {
        crate::expand::enumerate_runs().into_iter().map(|k| (k, f(k))).collect()
    }

    #[test]
    fn impact_pair_counts() {
        let all = means(|_| 0.1);
        for src in ImpactSource::ALL {
            let r = source_impact(&all, src).unwrap();
            let want = match src {
                ImpactSource::Paper(_) => 2 * 3 * 3,
                ImpactSource::Reviewer(_) => 2 * 7,
            };
            assert_eq!(r.points.len(), want, "{src}");
            assert_eq!(r.ties, want);
        }
    }

    #[test]
    fn impact_detects_harmful_source() {
        let m = means(|k| if k.paper_sources.contains(PaperSource::Keywords) { 0.1 } else { 0.2 });
        let r = source_impact(&m, ImpactSource::Paper(PaperSource::Keywords)).unwrap();
        assert_eq!(r.include_wins, 0);
        assert_eq!(r.exclude_wins, 18);
        let helpful = means(|k| 0.1 * k.paper_sources.len() as f64);
        let r = source_impact(&helpful, ImpactSource::Paper(PaperSource::Title)).unwrap();
        assert_eq!(r.include_wins, 18);
    }

    #[test]
    fn impact_missing_run_is_an_error() {
        let mut m = means(|_| 0.1);
        let k: RunKey = "concat/ph/AK".parse().unwrap();
        m.remove(&k);
        assert_eq!(source_impact(&m, ImpactSource::Reviewer(ReviewerSource::Homepage)), Err(EvalError::MissingRun(k)));
    }

    #[test]
    fn impact_source_parse() {
        assert_eq!("k".parse::<ImpactSource>(), Ok(ImpactSource::Paper(PaperSource::Keywords)));
        assert_eq!("h".parse::<ImpactSource>(), Ok(ImpactSource::Reviewer(ReviewerSource::Homepage)));
        assert!("ph".parse::<ImpactSource>().is_err());
    }

    #[test]
    fn sampling_is_seeded_and_refills() {
        let names: Vec<String> = (0..30).map(|i| format!("r{i:02}")).collect();
        let a = sample_reviewers(&names, 10, 1, |_| true);
        let mut rev = names.clone();
        rev.reverse();
        assert_eq!(a, sample_reviewers(&rev, 10, 1, |_| true));
        assert_ne!(a, sample_reviewers(&names, 10, 2, |_| true));
        assert_eq!(a.chosen.len(), 10);

        let odd = |r: &str| r.ends_with(['1', '3', '5', '7', '9']);
        let b = sample_reviewers(&names, 10, 1, odd);
        assert_eq!(b.chosen.len(), 10);
        assert!(b.chosen.iter().all(|r| odd(r)));
        assert!(!b.skipped.is_empty());

        let all = sample_reviewers(&names, 100, 1, |_| true);
        assert_eq!(all.chosen, names);
    }

    #[test]
    fn baseline_examples() {
        assert!((random_baseline(&[14], 200, 10).unwrap() - 0.07).abs() < 1e-15);
        assert_eq!(random_baseline(&[200, 200], 200, 30).unwrap(), 1.0);
        assert!(random_baseline(&[3], 5, 10).is_err());
        assert!(random_baseline(&[], 50, 10).is_err());
    }

    #[test]
    fn baseline_agrees_with_monte_carlo() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let papers: Vec<String> = (0..100).map(|i| format!("p{i}")).collect();
        let prefs: Vec<BTreeSet<String>> = [7usize, 12, 20]
            .iter()
            .map(|&k| papers.iter().take(k).cloned().collect())
            .collect();
        let sizes: Vec<usize> = prefs.iter().map(|p| p.len()).collect();
        let expected = random_baseline(&sizes, papers.len(), 10).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let trials = 4000;
        let mut draws = Vec::with_capacity(trials);
        let mut pool = papers.clone();
        for _ in 0..trials {
            let mut total = 0.0;
            for pref in &prefs {
                pool.shuffle(&mut rng);
                total += precision_at_n(&pool[..10], pref, 10);
            }
            draws.push(total / prefs.len() as f64);
        }
        let mean = draws.iter().sum::<f64>() / trials as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (trials - 1) as f64;
        let se = libm::sqrt(var / trials as f64);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
    }

    proptest! {
        #[test]
        fn precision_monotone_under_hit_insertion(
            len in 0usize..15, n in 1usize..12, hits in proptest::collection::btree_set(0usize..15, 0..8), at in 0usize..15,
        ) {
            let ranked: Vec<String> = (0..len).map(|i| format!("p{i}")).collect();
            let preferred: BTreeSet<String> = hits.iter().map(|i| format!("p{i}")).chain([String::from("new")]).collect();
            let before = precision_at_n(&ranked, &preferred, n);
            let mut after = ranked.clone();
            after.insert(at.min(len), String::from("new"));
            prop_assert!(precision_at_n(&after, &preferred, n) >= before);
            prop_assert!((0.0..=1.0).contains(&before));
        }

        #[test]
        fn sign_test_symmetric(pairs in proptest::collection::vec((0u8..4, 0u8..4), 0..25)) {
            let qi: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let qj: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            let a = sign_test(&qi, &qj).unwrap();
            let b = sign_test(&qj, &qi).unwrap();
            prop_assert_eq!((a.wins_i, a.wins_j), (b.wins_j, b.wins_i));
            prop_assert_eq!(a.p_value, b.p_value);
            if let Some(p) = a.p_value {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn impact_pairing_is_a_bijection(src in 0usize..3, method in 0usize..2) {
            let source = PaperSource::ALL[src];
            let methods: BTreeSet<Method> = [Method::ALL[method]].into_iter().collect();
            let pairs = impact_pairs(&methods, ImpactSource::Paper(source));
            for r in ReviewerSource::ALL {
                let ex: BTreeSet<SourceSet> = pairs.iter().filter(|p| p.0.reviewer_source == r).map(|p| p.0.paper_sources).collect();
                let inc: BTreeSet<SourceSet> = pairs.iter().filter(|p| p.1.reviewer_source == r).map(|p| p.1.paper_sources).collect();
                prop_assert_eq!(ex.len(), 3);
                prop_assert_eq!(inc.len(), 3);
                prop_assert!(ex.iter().all(|s| !s.contains(source)));
                prop_assert!(inc.iter().all(|s| s.contains(source) && s.len() >= 2));
            }
        }
    }
}
