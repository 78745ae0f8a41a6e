//! Reviewer sampling and the two experiment drivers.

use std::collections::BTreeSet;

use bidmatch_core::cf::{simulate_online, Algorithm, RatingMatrix, SimOptions};
use bidmatch_core::eval::{
    build_matrix, evaluate_runs, mean_precision, random_baseline, sample_reviewers, PrecisionScore, RunId, ScoreMatrix,
};
use bidmatch_core::expand::{enumerate_runs, Method};

use crate::error::{CliError, Result};
use crate::store::Dataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub sample: usize,
    pub cutoffs: Vec<usize>,
    pub k: usize,
    pub methods: Vec<Method>,
    /// List the seed positive as the first CF recommendation.
    pub present_feedback: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            sample: 50,
            cutoffs: vec![10, 30],
            k: 10,
            methods: Method::ALL.to_vec(),
            present_feedback: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, papers: usize) -> Result<()> {
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(CliError::Usage("cutoffs must be at least 1".into()));
        }
        if let Some(&n) = self.cutoffs.iter().find(|&&n| n > papers) {
            return Err(CliError::Usage(format!("cutoff {n} exceeds the {papers} papers in the store")));
        }
        if self.sample == 0 {
            return Err(CliError::Usage("sample size must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Usage("no method selected".into()));
        }
        Ok(())
    }

    /// Sorted, de-duplicated cutoffs.
    pub fn cutoffs(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.cutoffs.iter().copied().collect();
        set.into_iter().collect()
    }

    pub fn methods(&self) -> Vec<Method> {
        let set: BTreeSet<Method> = self.methods.iter().copied().collect();
        set.into_iter().collect()
    }
}

/// Why a reviewer cannot be part of a sample, if it cannot.
pub fn ineligibility(d: &Dataset, name: &str) -> Option<&'static str> {
    let p = d.profile(name)?;
    if p.papers.trim().is_empty() {
        Some("no paper text")
    } else if p.homepage.trim().is_empty() {
        Some("no homepage text")
    } else if d.preferences.get(name).is_none_or(BTreeSet::is_empty) {
        Some("no preferred papers")
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sampled {
    pub reviewers: Vec<String>,
    pub skipped: Vec<String>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn sample(d: &Dataset, cfg: &ExperimentConfig) -> Result<Sampled> {
    let names: Vec<String> = d.profiles.iter().map(|p| p.name.clone()).collect();
    let s = sample_reviewers(&names, cfg.sample, cfg.seed, |r| ineligibility(d, r).is_none());
    let mut out = Sampled {
        warnings: s
            .skipped
            .iter()
            .map(|r| format!("reviewer {r} excluded: {}", ineligibility(d, r).unwrap_or("ineligible")))
            .collect(),
        reviewers: s.chosen,
        skipped: s.skipped,
        notes: Vec::new(),
    };
    if out.reviewers.is_empty() {
        return Err(CliError::Data("no reviewer has paper text, homepage text and preferences".into()));
    }
    if out.reviewers.len() < cfg.sample {
        let note = format!("sample clamped from {} to {} eligible reviewers", cfg.sample, out.reviewers.len());
        out.warnings.push(note.clone());
        out.notes.push(note);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MatrixOutcome {
    pub sampled: Sampled,
    pub scores: Vec<PrecisionScore>,
    /// One matrix per (method, cutoff), methods then cutoffs ascending.
    pub matrices: Vec<ScoreMatrix>,
    /// Expected precision of random assignment over the sample.
    pub baseline: f64,
    pub papers: usize,
}

impl MatrixOutcome {
    pub fn matrix(&self, method: Method, n: usize) -> Option<&ScoreMatrix> {
        self.matrices.iter().find(|m| m.method == method && m.n == n)
    }

    /// Per-reviewer precision of `run` at `n`, in sample order.
    pub fn per_reviewer(&self, run: RunId, n: usize) -> Vec<f64> {
        self.sampled
            .reviewers
            .iter()
            .map(|r| {
                self.scores
                    .iter()
                    .find(|s| s.run == run && s.n == n && &s.reviewer == r)
                    .map_or(0.0, |s| s.value)
            })
            .collect()
    }
}

/// Runs every selected content-based query for the sampled reviewers.
pub fn run_matrix(d: &Dataset, cfg: &ExperimentConfig) -> Result<MatrixOutcome> {
    cfg.validate(d.papers.len())?;
    let sampled = sample(d, cfg)?;
    let methods = cfg.methods();
    let cutoffs = cfg.cutoffs();
    let runs: Vec<_> = enumerate_runs().into_iter().filter(|k| methods.contains(&k.method)).collect();
    let mut store = d.relations()?;
    let scores = evaluate_runs(&mut store, &runs, &sampled.reviewers, &d.preferences, &cutoffs).map_err(CliError::data)?;
    let mut matrices = Vec::new();
    for &m in &methods {
        for &n in &cutoffs {
            matrices.push(build_matrix(&scores, n, m).map_err(CliError::data)?);
        }
    }
    let sizes: Vec<usize> = sampled.reviewers.iter().map(|r| d.preferences[r].len()).collect();
    let baseline = random_baseline(&sizes, d.papers.len(), cutoffs[0]).map_err(CliError::data)?;
    Ok(MatrixOutcome {
        sampled,
        scores,
        matrices,
        baseline,
        papers: d.papers.len(),
    })
}

#[derive(Debug, Clone)]
pub struct CfOutcome {
    pub sampled: Sampled,
    pub k_effective: usize,
    pub scores: Vec<PrecisionScore>,
    /// Mean precision per (algorithm, cutoff).
    pub cells: Vec<(Algorithm, usize, f64)>,
    pub baseline: f64,
}

pub fn cf_algorithms(k: usize) -> [Algorithm; 2] {
    [Algorithm::Knn { k }, Algorithm::ExtendedDirectBayes]
}

/// Simulates both recommenders online for each sampled reviewer. Every
/// reviewer in the store takes part as a potential neighbour.
pub fn run_cf(d: &Dataset, cfg: &ExperimentConfig) -> Result<CfOutcome> {
    cfg.validate(d.papers.len())?;
    let mut sampled = sample(d, cfg)?;
    let cutoffs = cfg.cutoffs();
    let matrix = RatingMatrix::new(
        d.papers.iter().map(|p| p.id.clone()),
        d.profiles.iter().map(|p| {
            let liked = d.preferences.get(&p.name).cloned().unwrap_or_default();
            (p.name.clone(), liked)
        }),
    )
    .map_err(CliError::data)?;
    let pool = matrix.reviewers().len().saturating_sub(1).max(1);
    let k_effective = cfg.k.min(pool);
    if k_effective < cfg.k {
        let note = format!("k clamped from {} to {} (reviewer pool size)", cfg.k, k_effective);
        sampled.warnings.push(note.clone());
        sampled.notes.push(note);
    }
    let options = SimOptions {
        present_seed: cfg.present_feedback,
    };
    let mut scores = Vec::new();
    for name in &sampled.reviewers {
        let r = matrix.reviewer_index(name).expect("sampled from the store");
        let preferred = &d.preferences[name];
        for alg in cf_algorithms(k_effective) {
            let list = simulate_online(&matrix, r, alg, options);
            for &n in &cutoffs {
                scores.push(PrecisionScore::evaluate(name.clone(), RunId::Cf(alg), &list, preferred, n));
            }
        }
    }
    let mut cells = Vec::new();
    for alg in cf_algorithms(k_effective) {
        for &n in &cutoffs {
            let mean = mean_precision(&scores, RunId::Cf(alg), n).unwrap_or(0.0);
            cells.push((alg, n, mean));
        }
    }
    let sizes: Vec<usize> = sampled.reviewers.iter().map(|r| d.preferences[r].len()).collect();
    let baseline = random_baseline(&sizes, d.papers.len(), cutoffs[0]).map_err(CliError::data)?;
    Ok(CfOutcome {
        sampled,
        k_effective,
        scores,
        cells,
        baseline,
    })
}
