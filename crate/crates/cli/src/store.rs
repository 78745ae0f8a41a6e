//! The persisted store: a directory of normalized JSON Lines plus a corpus
//! statistics sidecar.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use bidmatch_core::relation::{paper_relation, reviewer_relation, PaperRecord, Relation, ReviewerProfile, Store};
use bidmatch_core::textpipe::Tokenizer;

use crate::error::{CliError, Result};
use crate::formats;
use crate::report::atomic_write;

pub const PAPERS_FILE: &str = "papers.jsonl";
pub const REVIEWERS_FILE: &str = "reviewers.jsonl";
pub const PREFERENCES_FILE: &str = "preferences.jsonl";
pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const STATS_FILE: &str = "stats.json";

/// Files covered by [`digest`], in hashing order.
pub const STORE_FILES: [&str; 5] = [PAPERS_FILE, REVIEWERS_FILE, PREFERENCES_FILE, STOPWORDS_FILE, STATS_FILE];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub papers: Vec<PaperRecord>,
    pub profiles: Vec<ReviewerProfile>,
    pub preferences: BTreeMap<String, BTreeSet<String>>,
    pub stopwords: Vec<String>,
}

impl Dataset {
    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::with_stopwords(&self.stopwords)
    }

    /// Fresh `Paper` and `Reviewer` relations.
    pub fn relations(&self) -> Result<Store> {
        let mut store = Store::new();
        let papers = paper_relation(self.papers.clone(), self.tokenizer()).map_err(CliError::data)?;
        let reviewers = reviewer_relation(self.profiles.clone(), self.tokenizer()).map_err(CliError::data)?;
        store.insert(papers).map_err(CliError::data)?;
        store.insert(reviewers).map_err(CliError::data)?;
        Ok(store)
    }

    pub fn profile(&self, name: &str) -> Option<&ReviewerProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    /// Checks that every preference names a known reviewer and paper.
    pub fn validate(&self) -> Result<()> {
        let papers: BTreeSet<&str> = self.papers.iter().map(|p| p.id.as_str()).collect();
        for (reviewer, liked) in &self.preferences {
            if self.profile(reviewer).is_none() {
                return Err(CliError::Data(format!("preferences name unknown reviewer `{reviewer}`")));
            }
            if let Some(p) = liked.iter().find(|p| !papers.contains(p.as_str())) {
                return Err(CliError::Data(format!("reviewer `{reviewer}` prefers unknown paper `{p}`")));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ColumnStats {
    doc_count: usize,
    df: BTreeMap<String, usize>,
}

fn relation_stats(rel: &Relation) -> BTreeMap<String, ColumnStats> {
    rel.columns()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let s = rel.column_stats(i);
            let df = s.terms().map(|(t, n)| (t.to_string(), n)).collect();
            (
                name.clone(),
                ColumnStats {
                    doc_count: s.doc_count(),
                    df,
                },
            )
        })
        .collect()
}

fn stats_json(store: &Store) -> String {
    let all: BTreeMap<&str, BTreeMap<String, ColumnStats>> =
        store.relations().iter().map(|r| (r.name(), relation_stats(r))).collect();
    let mut s = serde_json::to_string_pretty(&all).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub papers: usize,
    pub reviewers: usize,
    pub digest: String,
}

/// Reads raw inputs, validates them and (re)writes the store directory.
pub fn ingest(papers: &Path, reviewers: &Path, preferences: &Path, stopwords: Option<&Path>, store_dir: &Path) -> Result<IngestSummary> {
    for (what, p) in [("papers", papers), ("reviewers", reviewers), ("preferences", preferences)] {
        if !p.exists() {
            return Err(CliError::Data(format!("{what} input not found: {}", p.display())));
        }
    }
    let dataset = Dataset {
        papers: formats::read_papers(papers)?,
        profiles: formats::read_reviewers(reviewers)?.iter().map(formats::RawReviewer::profile).collect(),
        preferences: formats::read_preferences(preferences)?,
        stopwords: stopwords.map(formats::read_stopwords).transpose()?.unwrap_or_default(),
    };
    dataset.validate()?;
    save(&dataset, store_dir)?;
    Ok(IngestSummary {
        papers: dataset.papers.len(),
        reviewers: dataset.profiles.len(),
        digest: digest(store_dir)?,
    })
}

pub fn save(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let store = dataset.relations()?;
    let mut stop = dataset.stopwords.join("\n");
    if !stop.is_empty() {
        stop.push('\n');
    }
    atomic_write(&dir.join(PAPERS_FILE), formats::papers_jsonl(&dataset.papers).as_bytes())?;
    atomic_write(&dir.join(REVIEWERS_FILE), formats::profiles_jsonl(&dataset.profiles).as_bytes())?;
    atomic_write(&dir.join(PREFERENCES_FILE), formats::preferences_jsonl(&dataset.preferences).as_bytes())?;
    atomic_write(&dir.join(STOPWORDS_FILE), stop.as_bytes())?;
    atomic_write(&dir.join(STATS_FILE), stats_json(&store).as_bytes())?;
    Ok(())
}

fn store_path(dir: &Path, file: &str) -> Result<PathBuf> {
    let p = dir.join(file);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::Data(format!("not a store (missing {}): {}", file, dir.display())))
    }
}

pub fn load(dir: &Path) -> Result<Dataset> {
    let dataset = Dataset {
        papers: formats::read_papers(&store_path(dir, PAPERS_FILE)?)?,
        profiles: formats::read_profiles(&store_path(dir, REVIEWERS_FILE)?)?,
        preferences: formats::read_preferences(&store_path(dir, PREFERENCES_FILE)?)?,
        stopwords: formats::read_stopwords(&store_path(dir, STOPWORDS_FILE)?)?,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// SHA-256 over the store files, each prefixed by its name.
pub fn digest(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for file in STORE_FILES {
        let p = store_path(dir, file)?;
        let bytes = fs::read(&p).map_err(CliError::io(&p))?;
        h.update(file.as_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> Dataset {
        Dataset {
            papers: vec![
                PaperRecord {
                    id: "p1".into(),
                    title: "Planning agents".into(),
                    abstract_text: "agents that plan".into(),
                    keywords: "planning".into(),
                },
                PaperRecord {
                    id: "p2".into(),
                    title: "Vision".into(),
                    abstract_text: "images and pixels".into(),
                    keywords: "vision".into(),
                },
            ],
            profiles: vec![ReviewerProfile {
                name: "ann".into(),
                homepage: "I like planning".into(),
                papers: "agents plan".into(),
            }],
            preferences: [("ann".to_string(), ["p1".to_string()].into())].into(),
            stopwords: vec!["and".into()],
        }
    }

    #[test]
    fn save_load_round_trip_and_stable_digest() {
        let dir = tempfile::tempdir().unwrap();
        save(&dataset(), dir.path()).unwrap();
        let d1 = digest(dir.path()).unwrap();
        assert_eq!(load(dir.path()).unwrap(), dataset());
        save(&dataset(), dir.path()).unwrap();
        assert_eq!(digest(dir.path()).unwrap(), d1);
        let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(STATS_FILE)).unwrap()).unwrap();
        assert_eq!(stats["Paper"]["abstract"]["doc_count"], 2);
        assert_eq!(stats["Paper"]["abstract"]["df"]["agent"], 1);
    }

    #[test]
    fn validation_names_the_problem() {
        let mut d = dataset();
        d.preferences.insert("zed".into(), BTreeSet::new());
        assert!(d.validate().unwrap_err().to_string().contains("zed"));
        let mut d = dataset();
        d.preferences.get_mut("ann").unwrap().insert("p9".into());
        assert!(d.validate().unwrap_err().to_string().contains("p9"));
    }

    #[test]
    fn loading_a_non_store_fails() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load(dir.path()), Err(CliError::Data(_))));
    }
}
