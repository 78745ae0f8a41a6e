//! Collaborative filtering over binary preferences.
//!
//! Two recommenders are simulated online against ground truth: each trial
//! presents the best-scoring unseen paper, the simulated reviewer answers
//! from its true preferences, and a negative answer is followed by one more
//! true positive handed over as feedback. The run ends at the first negative
//! answer for which no unused positive is left.
//!
//! Before the first trial the reviewer's lowest-id preferred paper is
//! consumed as a seed positive. It is feedback, not a recommendation.
//!
//! - kNN: the `k` reviewers closest in L1 distance over the papers rated so
//!   far vote with their true ratings.
//! - Extended Direct Bayes: noisy-or over Laplace-corrected co-preference
//!   estimates, `1 - prod(1 - R(P_i, P))` across the positives `P_i`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfError {
    #[error("reviewer `{reviewer}` prefers unknown paper `{paper}`")]
    UnknownPaper { reviewer: String, paper: String },
    #[error("reviewer `{0}` listed twice")]
    DuplicateReviewer(String),
    #[error("paper `{0}` listed twice")]
    DuplicatePaper(String),
}

/// Total binary reviewer × paper preferences. Reviewers and papers are kept
/// sorted by id, so index order is id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    reviewers: Vec<String>,
    papers: Vec<String>,
    liked: Vec<Vec<bool>>,
}

impl RatingMatrix {
    /// Every paper not listed for a reviewer is rated 0.
    pub fn new<P, R, L>(papers: P, preferences: R) -> Result<Self, CfError>
    where
        P: IntoIterator<Item = String>,
        R: IntoIterator<Item = (String, L)>,
        L: IntoIterator<Item = String>,
    {
        let mut paper_ids: Vec<String> = papers.into_iter().collect();
        paper_ids.sort();
        if let Some(w) = paper_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(CfError::DuplicatePaper(w[0].clone()));
        }
        let mut rows: Vec<(String, Vec<bool>)> = Vec::new();
        for (reviewer, liked) in preferences {
            let mut row = vec![false; paper_ids.len()];
            for p in liked {
                match paper_ids.binary_search(&p) {
                    Ok(i) => row[i] = true,
                    Err(_) => return Err(CfError::UnknownPaper { reviewer, paper: p }),
                }
            }
            rows.push((reviewer, row));
        }
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(CfError::DuplicateReviewer(w[0].0.clone()));
        }
        let (reviewers, liked) = rows.into_iter().unzip();
        Ok(Self {
            reviewers,
            papers: paper_ids,
            liked,
        })
    }

    pub fn reviewers(&self) -> &[String] {
        &self.reviewers
    }

    pub fn papers(&self) -> &[String] {
        &self.papers
    }

    pub fn reviewer_index(&self, name: &str) -> Option<usize> {
        self.reviewers.binary_search_by(|r| r.as_str().cmp(name)).ok()
    }

    pub fn paper_index(&self, id: &str) -> Option<usize> {
        self.papers.binary_search_by(|p| p.as_str().cmp(id)).ok()
    }

    pub fn rating(&self, reviewer: usize, paper: usize) -> u8 {
        u8::from(self.liked[reviewer][paper])
    }

    pub fn likes(&self, reviewer: usize, paper: usize) -> bool {
        self.liked[reviewer][paper]
    }

    /// Preferred papers of `reviewer`, ascending.
    pub fn positives(&self, reviewer: usize) -> Vec<usize> {
        (0..self.papers.len()).filter(|&p| self.liked[reviewer][p]).collect()
    }

    pub fn preferred_ids(&self, reviewer: usize) -> BTreeSet<String> {
        self.positives(reviewer)
            .into_iter()
            .map(|p| self.papers[p].clone())
            .collect()
    }
}

/// What the active reviewer has rated so far in one simulation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrialState {
    /// `(paper, rating)` in the order the ratings were given.
    pub rated: Vec<(usize, u8)>,
    /// Papers rated 1, in rating order.
    pub positives: Vec<usize>,
    /// Recommendations shown, in order.
    pub presented: Vec<usize>,
    /// True positives not yet rated, ascending.
    pub remaining_feedback: Vec<usize>,
}

impl TrialState {
    fn is_used(&self, paper: usize) -> bool {
        self.rated.iter().any(|&(p, _)| p == paper)
    }

    fn rate(&mut self, paper: usize, rating: u8) {
        self.rated.push((paper, rating));
        if rating == 1 {
            self.positives.push(paper);
            self.remaining_feedback.retain(|&p| p != paper);
        }
    }
}

/// L1 distance between the active reviewer's ratings so far and `other`'s
/// true ratings of the same papers.
pub fn knn_distance(matrix: &RatingMatrix, other: usize, state: &TrialState) -> usize {
    state
        .rated
        .iter()
        .map(|&(p, r)| usize::from(r != matrix.rating(other, p)))
        .sum()
}

/// The `min(k, others)` nearest reviewers; equal distances go to the lower
/// reviewer id.
pub fn knn_neighbors(matrix: &RatingMatrix, active: usize, state: &TrialState, k: usize) -> Vec<usize> {
    let mut others: Vec<(usize, usize)> = (0..matrix.reviewers.len())
        .filter(|&r| r != active)
        .map(|r| (knn_distance(matrix, r, state), r))
        .collect();
    others.sort_unstable();
    others.into_iter().take(k).map(|(_, r)| r).collect()
}

/// Number of neighbours who truly prefer `paper`.
pub fn knn_score(matrix: &RatingMatrix, paper: usize, neighbors: &[usize]) -> usize {
    neighbors.iter().map(|&r| usize::from(matrix.rating(r, paper))).sum()
}

/// `(#others preferring i and j + 1) / (#others preferring i + 2)`: the
/// Laplace-corrected chance of liking `j` given a liking for `i`, estimated
/// from every reviewer except `exclude`.
pub fn relatedness(i: usize, j: usize, matrix: &RatingMatrix, exclude: usize) -> f64 {
    let (mut both, mut with_i) = (0u32, 0u32);
    for r in (0..matrix.reviewers.len()).filter(|&r| r != exclude) {
        if matrix.likes(r, i) {
            with_i += 1;
            if matrix.likes(r, j) {
                both += 1;
            }
        }
    }
    f64::from(both + 1) / f64::from(with_i + 2)
}

/// Relatedness for every paper pair, precomputed from co-preference counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RelatednessTable {
    papers: usize,
    co: Vec<u32>,
}

impl RelatednessTable {
    pub fn build(matrix: &RatingMatrix, exclude: usize) -> Self {
        let m = matrix.papers.len();
        let mut co = vec![0u32; m * m];
        for r in (0..matrix.reviewers.len()).filter(|&r| r != exclude) {
            let pos = matrix.positives(r);
            for &i in &pos {
                for &j in &pos {
                    co[i * m + j] += 1;
                }
            }
        }
        Self { papers: m, co }
    }

    /// Same value as [`relatedness`]`(i, j, ..)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let both = self.co[i * self.papers + j];
        let with_i = self.co[i * self.papers + i];
        f64::from(both + 1) / f64::from(with_i + 2)
    }
}

/// `1 - prod over positives P_i of (1 - R(P_i, candidate))`.
pub fn edb_score(candidate: usize, positives: &[usize], table: &RelatednessTable) -> f64 {
    // 1 - miss rounds to 1.0 once miss drops below half an ulp of 1
    (1.0 - edb_miss(candidate, positives, table)).min(1.0 - f64::EPSILON / 2.0)
}

/// Π(1 - R(Pᵢ, candidate)); smaller means a higher EDB score. Ranks without
/// the rounding of `1 - miss` near one.
pub fn edb_miss(candidate: usize, positives: &[usize], table: &RelatednessTable) -> f64 {
    positives.iter().map(|&pi| 1.0 - table.get(pi, candidate)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Knn { k: usize },
    ExtendedDirectBayes,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Knn { .. } => "kNN",
            Algorithm::ExtendedDirectBayes => "ExtendedDirectBayes",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Highest score wins; ties go to the lowest index.
pub fn best_candidate<I>(scores: I) -> Option<usize>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut best: Option<(usize, f64)> = None;
    for (p, s) in scores {
        match best {
            Some((bp, bs)) if s < bs || (s == bs && p > bp) => {}
            _ => best = Some((p, s)),
        }
    }
    best.map(|(p, _)| p)
}

/// One online trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub presented: usize,
    pub liked: bool,
    /// Positive handed over after a negative answer.
    pub feedback: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub seed: Option<usize>,
    pub trials: Vec<Trial>,
}

impl Trace {
    pub fn presented(&self) -> impl Iterator<Item = usize> + '_ {
        self.trials.iter().map(|t| t.presented)
    }
}

/// Runs the online protocol for `reviewer` and records every trial.
pub fn simulate_trace(matrix: &RatingMatrix, reviewer: usize, algorithm: Algorithm) -> Trace {
    let truth = matrix.positives(reviewer);
    let Some((&seed, rest)) = truth.split_first() else {
        return Trace::default();
    };
    let mut state = TrialState {
        remaining_feedback: rest.to_vec(),
        ..TrialState::default()
    };
    state.rate(seed, 1);
    let table = match algorithm {
        Algorithm::ExtendedDirectBayes => Some(RelatednessTable::build(matrix, reviewer)),
        Algorithm::Knn { .. } => None,
    };

    let mut trace = Trace {
        seed: Some(seed),
        trials: Vec::new(),
    };
    loop {
        let candidates = (0..matrix.papers.len()).filter(|&p| !state.is_used(p));
        let next = match (algorithm, &table) {
            (Algorithm::Knn { k }, _) => {
                let neighbors = knn_neighbors(matrix, reviewer, &state, k);
                best_candidate(candidates.map(|p| (p, knn_score(matrix, p, &neighbors) as f64)))
            }
            (Algorithm::ExtendedDirectBayes, Some(t)) => {
                best_candidate(candidates.map(|p| (p, -edb_miss(p, &state.positives, t))))
            }
            (Algorithm::ExtendedDirectBayes, None) => unreachable!("table built for EDB"),
        };
        let Some(paper) = next else { break };
        let liked = matrix.likes(reviewer, paper);
        state.presented.push(paper);
        state.rate(paper, u8::from(liked));
        if liked {
            trace.trials.push(Trial { presented: paper, liked, feedback: None });
            continue;
        }
        if state.remaining_feedback.is_empty() {
            trace.trials.push(Trial { presented: paper, liked, feedback: None });
            break;
        }
        let fb = state.remaining_feedback[0];
        state.rate(fb, 1);
        trace.trials.push(Trial {
            presented: paper,
            liked,
            feedback: Some(fb),
        });
    }
    trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    /// Put the seed positive at the head of the recommendation list.
    pub present_seed: bool,
}

/// Paper ids presented to `reviewer`, in order. Empty when the reviewer has
/// no preferred papers.
pub fn simulate_online(matrix: &RatingMatrix, reviewer: usize, algorithm: Algorithm, options: SimOptions) -> Vec<String> {
    let trace = simulate_trace(matrix, reviewer, algorithm);
    let seed = trace.seed.filter(|_| options.present_seed);
    seed.into_iter()
        .chain(trace.presented())
        .map(|p| matrix.papers[p].to_string())
        .collect()
}
