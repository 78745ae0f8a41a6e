//! Writes a synthetic corpus in the raw input layout `ingest` reads.

use std::fs;
use std::path::Path;

use bidmatch_core::eval::SynthCorpus;

use crate::error::{CliError, Result};
use crate::formats::{self, RawReviewer};
use crate::report::atomic_write;

pub const PAPERS: &str = "papers.jsonl";
pub const PREFERENCES: &str = "preferences.jsonl";
pub const REVIEWERS: &str = "reviewers";

pub fn write_corpus(dir: &Path, corpus: &SynthCorpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let reviewers = dir.join(REVIEWERS);
    if reviewers.exists() {
        fs::remove_dir_all(&reviewers).map_err(CliError::io(&reviewers))?;
    }
    atomic_write(&dir.join(PAPERS), formats::papers_jsonl(&corpus.paper_records()).as_bytes())?;
    atomic_write(&dir.join(PREFERENCES), formats::preferences_jsonl(&corpus.preferences).as_bytes())?;
    let raw: Vec<RawReviewer> = corpus
        .reviewers
        .iter()
        .map(|r| RawReviewer {
            name: r.name.clone(),
            homepage: r.homepage.clone(),
            documents: r.documents.clone(),
        })
        .collect();
    formats::write_reviewers(&reviewers, &raw)
}
