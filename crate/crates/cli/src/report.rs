//! Table, scatter and manifest rendering, and atomic file output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use bidmatch_core::cf::Algorithm;
use bidmatch_core::eval::{improvement_report, sign_test, source_impact, ImpactSource, RunId, ScoreMatrix, SourceImpact};
use bidmatch_core::expand::{Method, ReviewerSource, RunKey, SourceSet};

use crate::error::{CliError, Result};
use crate::experiment::{CfOutcome, ExperimentConfig, MatrixOutcome};

/// Writes through a sibling temporary file and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(CliError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(CliError::io(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn method_title(m: Method) -> &'static str {
    match m {
        Method::Concat => "queryConcat",
        Method::Conjunct => "queryConjunct",
    }
}

/// Table file name for `method`, numbered as in the published report.
pub fn matrix_file(m: Method) -> &'static str {
    match m {
        Method::Conjunct => "table1_conjunct.tsv",
        Method::Concat => "table2_concat.tsv",
    }
}

/// One block of rows per cutoff, reviewer sources down, paper sources across.
pub fn matrix_tsv(matrices: &[&ScoreMatrix]) -> String {
    let mut out = String::from("Source(s)");
    for s in SourceSet::ALL {
        let _ = write!(out, "\t{s}");
    }
    out.push('\n');
    for m in matrices {
        for r in ReviewerSource::ALL {
            let _ = write!(out, "{r}(Top{})", m.n);
            for v in m.row(r) {
                let _ = write!(out, "\t{v:.3}");
            }
            out.push('\n');
        }
    }
    out
}

fn matrix_markdown(matrices: &[&ScoreMatrix]) -> String {
    let mut out = String::from("| Source(s) |");
    for s in SourceSet::ALL {
        let _ = write!(out, " {s} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(SourceSet::ALL.len()));
    out.push('\n');
    for m in matrices {
        for r in ReviewerSource::ALL {
            let _ = write!(out, "| {r}(Top{}) |", m.n);
            for v in m.row(r) {
                let _ = write!(out, " {v:.3} |");
            }
            out.push('\n');
        }
    }
    out
}

fn percent(p: Option<i64>) -> String {
    p.map_or_else(|| "undefined".into(), |p| format!("{p}%"))
}

/// Worst single-source query against the all-source query, per row.
pub fn improvement_tsv(matrices: &[&ScoreMatrix]) -> String {
    let mut out = String::from("method\tquery\tsingle\tmulti\timprovement\n");
    for m in matrices {
        for i in improvement_report(m) {
            let _ = writeln!(
                out,
                "{}\t{}(Top {})\t{:.3}\t{:.3}\t{}",
                m.method,
                i.label(),
                m.n,
                i.single,
                i.multi,
                percent(i.percent)
            );
        }
    }
    out
}

/// Query pairs compared with the sign test: each row's all-source query
/// against the row's other queries, and `ph` against `p` and `h` in each
/// column.
pub fn sign_test_pairs(method: Method) -> Vec<(RunKey, RunKey)> {
    let mut pairs = Vec::new();
    for r in ReviewerSource::ALL {
        for s in SourceSet::ALL.into_iter().filter(|&s| s != SourceSet::AKT) {
            pairs.push((RunKey::new(method, r, SourceSet::AKT), RunKey::new(method, r, s)));
        }
    }
    for s in SourceSet::ALL {
        for other in [ReviewerSource::Papers, ReviewerSource::Homepage] {
            pairs.push((RunKey::new(method, ReviewerSource::Both, s), RunKey::new(method, other, s)));
        }
    }
    pairs
}

pub fn sign_tests_tsv(outcome: &MatrixOutcome, methods: &[Method], cutoffs: &[usize]) -> Result<String> {
    let mut out = String::from("method\tn\tquery_i\tquery_j\twins_i\twins_j\tp_value\tsignificant\n");
    for &m in methods {
        for &n in cutoffs {
            for (qi, qj) in sign_test_pairs(m) {
                let a = outcome.per_reviewer(RunId::Content(qi), n);
                let b = outcome.per_reviewer(RunId::Content(qj), n);
                let t = sign_test(&a, &b).map_err(CliError::data)?;
                let (p, sig) = match t.p_value {
                    Some(p) => (format!("{p:.5}"), if t.significant { "yes" } else { "no" }),
                    None => ("NA".into(), "NA"),
                };
                let _ = writeln!(
                    out,
                    "{m}\t{n}\t{}\t{}\t{}\t{}\t{p}\t{sig}",
                    qi.cell_label(),
                    qj.cell_label(),
                    t.wins_i,
                    t.wins_j
                );
            }
        }
    }
    Ok(out)
}

pub fn means_at(outcome: &MatrixOutcome, n: usize) -> BTreeMap<RunKey, f64> {
    outcome
        .matrices
        .iter()
        .filter(|m| m.n == n)
        .flat_map(ScoreMatrix::entries)
        .collect()
}

pub fn impact_csv(impact: &SourceImpact) -> String {
    let mut out = String::from("exclude_precision,include_precision,run\n");
    for p in &impact.points {
        let _ = writeln!(out, "{:.4},{:.4},{}", p.exclude_precision, p.include_precision, p.label());
    }
    out
}

/// Multi-source queries, concat on x and conjunct on y, all cutoffs in one
/// file.
pub fn concat_vs_conjunct_csv(outcome: &MatrixOutcome, cutoffs: &[usize]) -> Option<String> {
    let mut out = String::from("concat_precision,conjunct_precision,run\n");
    for &n in cutoffs {
        let concat = outcome.matrix(Method::Concat, n)?;
        let conjunct = outcome.matrix(Method::Conjunct, n)?;
        for r in ReviewerSource::ALL {
            // the methods only differ once two paper sources are combined
            for s in SourceSet::ALL.into_iter().filter(|s| s.len() >= 2) {
                let _ = writeln!(out, "{:.4},{:.4},{r}{s}@{n}", concat.get(r, s), conjunct.get(r, s));
            }
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub seed: u64,
    pub sample_requested: usize,
    pub reviewers: Vec<String>,
    pub skipped: Vec<String>,
    pub cutoffs: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_effective: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub present_feedback: Option<bool>,
    pub store_digest: String,
    pub random_baseline: f64,
    pub notes: Vec<String>,
    /// Output file name to its SHA-256.
    pub outputs: BTreeMap<String, String>,
}

struct Outputs<'a> {
    dir: &'a Path,
    digests: BTreeMap<String, String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(Self {
            dir,
            digests: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        atomic_write(&self.dir.join(name), text.as_bytes())?;
        self.digests.insert(name.to_string(), sha256_hex(text.as_bytes()));
        Ok(())
    }

    /// Writes the manifest last and returns its digest.
    fn finish(self, name: &str, mut manifest: Manifest) -> Result<String> {
        manifest.outputs = self.digests;
        let mut text = serde_json::to_string_pretty(&manifest).expect("plain data serializes");
        text.push('\n');
        atomic_write(&self.dir.join(name), text.as_bytes())?;
        Ok(sha256_hex(text.as_bytes()))
    }
}

pub const MATRIX_MANIFEST: &str = "matrix_manifest.json";
pub const CF_MANIFEST: &str = "cf_manifest.json";
pub const CF_TABLE: &str = "table4_cf.tsv";

/// Writes every matrix-experiment artefact into `dir` and returns the
/// manifest digest.
pub fn write_matrix_outputs(dir: &Path, outcome: &MatrixOutcome, cfg: &ExperimentConfig, store_digest: &str) -> Result<String> {
    let methods = cfg.methods();
    let cutoffs = cfg.cutoffs();
    let mut out = Outputs::new(dir)?;
    let mut md = String::from("# Source-combination experiment\n\n");
    let _ = writeln!(
        md,
        "{} reviewers sampled with seed {}; {} papers. Random assignment is expected to score {:.3} at every cutoff.\n",
        outcome.sampled.reviewers.len(),
        cfg.seed,
        outcome.papers,
        outcome.baseline
    );

    for &m in methods.iter().rev() {
        let ms: Vec<&ScoreMatrix> = cutoffs.iter().filter_map(|&n| outcome.matrix(m, n)).collect();
        out.write(matrix_file(m), &matrix_tsv(&ms))?;
        let _ = writeln!(md, "## Mean precision, {}\n\n{}", method_title(m), matrix_markdown(&ms));
    }

    let primary = if methods.contains(&Method::Conjunct) { Method::Conjunct } else { Method::Concat };
    let ms: Vec<&ScoreMatrix> = cutoffs.iter().filter_map(|&n| outcome.matrix(primary, n)).collect();
    let improvement = improvement_tsv(&ms);
    out.write("table3_improvement.tsv", &improvement)?;
    let _ = writeln!(md, "## Single-source vs all-source queries, {}\n", method_title(primary));
    md.push_str("| Single-source query | Single | All sources | Improvement |\n|---|---:|---:|---:|\n");
    for m in &ms {
        for i in improvement_report(m) {
            let _ = writeln!(md, "| {}(Top {}) | {:.3} | {:.3} | {} |", i.label(), m.n, i.single, i.multi, percent(i.percent));
        }
    }
    md.push('\n');

    let signs = sign_tests_tsv(outcome, &methods, &cutoffs)?;
    let significant = signs.lines().skip(1).filter(|l| l.ends_with("\tyes")).count();
    let total = signs.lines().count() - 1;
    out.write("sign_tests.tsv", &signs)?;
    let _ = writeln!(
        md,
        "## Sign tests\n\n{significant} of {total} paired comparisons are significant at 0.05 (two-tailed); see `sign_tests.tsv`.\n"
    );

    let mut summary = String::from("source\tn\tinclude_wins\texclude_wins\tties\n");
    md.push_str("## Source impact\n\n| Source | Top N | Include wins | Exclude wins | Ties |\n|---|---:|---:|---:|---:|\n");
    for &n in &cutoffs {
        let means = means_at(outcome, n);
        for src in ImpactSource::ALL {
            let impact = source_impact(&means, src).map_err(CliError::data)?;
            out.write(&format!("impact_{src}_top{n}.csv"), &impact_csv(&impact))?;
            let _ = writeln!(summary, "{src}\t{n}\t{}\t{}\t{}", impact.include_wins, impact.exclude_wins, impact.ties);
            let _ = writeln!(md, "| {src} | {n} | {} | {} | {} |", impact.include_wins, impact.exclude_wins, impact.ties);
        }
    }
    md.push('\n');
    out.write("impact_summary.tsv", &summary)?;

    if let Some(csv) = concat_vs_conjunct_csv(outcome, &cutoffs) {
        let above = csv
            .lines()
            .skip(1)
            .filter(|l| {
                let mut f = l.split(',');
                let x: f64 = f.next().and_then(|v| v.parse().ok()).unwrap_or(0.0);
                let y: f64 = f.next().and_then(|v| v.parse().ok()).unwrap_or(0.0);
                y > x
            })
            .count();
        let _ = writeln!(
            md,
            "## queryConjunct vs queryConcat\n\nqueryConjunct is ahead on {above} of {} multi-source queries; see `concat_vs_conjunct.csv`.\n",
            csv.lines().count() - 1
        );
        out.write("concat_vs_conjunct.csv", &csv)?;
    }
    if !outcome.sampled.notes.is_empty() {
        md.push_str("## Notes\n\n");
        for n in &outcome.sampled.notes {
            let _ = writeln!(md, "- {n}");
        }
    }
    out.write("report.md", &md)?;

    out.finish(
        MATRIX_MANIFEST,
        Manifest {
            command: "matrix",
            seed: cfg.seed,
            sample_requested: cfg.sample,
            reviewers: outcome.sampled.reviewers.clone(),
            skipped: outcome.sampled.skipped.clone(),
            cutoffs,
            methods: methods.iter().map(|m| m.to_string()).collect(),
            k: None,
            k_effective: None,
            present_feedback: None,
            store_digest: store_digest.into(),
            random_baseline: outcome.baseline,
            notes: outcome.sampled.notes.clone(),
            outputs: BTreeMap::new(),
        },
    )
}

pub fn cf_tsv(cells: &[(Algorithm, usize, f64)]) -> String {
    let cutoffs: BTreeSet<usize> = cells.iter().map(|c| c.1).collect();
    let mut out = String::from("Method(s)");
    for n in &cutoffs {
        let _ = write!(out, "\tTop {n}");
    }
    out.push('\n');
    let mut algs: Vec<Algorithm> = Vec::new();
    for c in cells {
        if !algs.contains(&c.0) {
            algs.push(c.0);
        }
    }
    for a in algs {
        out.push_str(a.name());
        for n in &cutoffs {
            let v = cells.iter().find(|c| c.0 == a && c.1 == *n).map_or(0.0, |c| c.2);
            let _ = write!(out, "\t{v:.3}");
        }
        out.push('\n');
    }
    out
}

pub fn write_cf_outputs(dir: &Path, outcome: &CfOutcome, cfg: &ExperimentConfig, store_digest: &str) -> Result<String> {
    let mut out = Outputs::new(dir)?;
    let table = cf_tsv(&outcome.cells);
    out.write(CF_TABLE, &table)?;
    let mut md = String::from("# Collaborative filtering\n\n");
    let _ = writeln!(
        md,
        "{} reviewers sampled with seed {}; k = {}. Random assignment is expected to score {:.3}.\n",
        outcome.sampled.reviewers.len(),
        cfg.seed,
        outcome.k_effective,
        outcome.baseline
    );
    let mut lines = table.lines();
    if let Some(head) = lines.next() {
        let cols = head.split('\t').count();
        let _ = writeln!(md, "| {} |", head.replace('\t', " | "));
        let _ = writeln!(md, "|---|{}", "---:|".repeat(cols - 1));
        for l in lines {
            let _ = writeln!(md, "| {} |", l.replace('\t', " | "));
        }
    }
    for n in &outcome.sampled.notes {
        let _ = writeln!(md, "\n- {n}");
    }
    out.write("cf_report.md", &md)?;
    out.finish(
        CF_MANIFEST,
        Manifest {
            command: "cf",
            seed: cfg.seed,
            sample_requested: cfg.sample,
            reviewers: outcome.sampled.reviewers.clone(),
            skipped: outcome.sampled.skipped.clone(),
            cutoffs: cfg.cutoffs(),
            methods: Vec::new(),
            k: Some(cfg.k),
            k_effective: Some(outcome.k_effective),
            present_feedback: Some(cfg.present_feedback),
            store_digest: store_digest.into(),
            random_baseline: outcome.baseline,
            notes: outcome.sampled.notes.clone(),
            outputs: BTreeMap::new(),
        },
    )
}
