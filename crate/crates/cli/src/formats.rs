//! On-disk input formats.
//!
//! - `papers.jsonl`: one `{"id", "title", "abstract", "keywords"}` object per
//!   line; `keywords` is a string or an array of strings.
//! - `preferences.jsonl`: one `{"reviewer", "papers": [...]}` object per line.
//! - reviewers directory: one sub-directory per reviewer, named after it, with
//!   an optional `homepage.txt` and a `papers/` folder of `*.txt` documents.
//! - stopwords: one word per line, `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bidmatch_core::relation::{PaperRecord, ReviewerProfile};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Keywords {
    Text(String),
    List(Vec<String>),
}

#[derive(Debug, Serialize, Deserialize)]
struct PaperLine {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(rename = "abstract", default)]
    abstract_text: String,
    #[serde(default = "no_keywords")]
    keywords: Keywords,
}

fn no_keywords() -> Keywords {
    Keywords::Text(String::new())
}

#[derive(Debug, Serialize, Deserialize)]
struct PreferenceLine {
    reviewer: String,
    papers: Vec<String>,
}

/// Normalized reviewer line of a persisted store.
#[derive(Debug, Serialize, Deserialize)]
struct ReviewerLine {
    name: String,
    homepage: String,
    papers: String,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn json_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

fn to_json_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn read_papers(path: &Path) -> Result<Vec<PaperRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, p) in json_lines::<PaperLine>(path)? {
        let fail = |message: String| CliError::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        if p.id.trim().is_empty() {
            return Err(fail("empty paper id".into()));
        }
        if !seen.insert(p.id.clone()) {
            return Err(fail(format!("duplicate paper id `{}`", p.id)));
        }
        let keywords = match p.keywords {
            Keywords::Text(s) => s,
            Keywords::List(v) => v.join(" "),
        };
        out.push(PaperRecord {
            id: p.id,
            title: p.title,
            abstract_text: p.abstract_text,
            keywords,
        });
    }
    Ok(out)
}

pub fn papers_jsonl(papers: &[PaperRecord]) -> String {
    to_json_lines(papers.iter().map(|p| PaperLine {
        id: p.id.clone(),
        title: p.title.clone(),
        abstract_text: p.abstract_text.clone(),
        keywords: Keywords::Text(p.keywords.clone()),
    }))
}

pub fn read_preferences(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut out = BTreeMap::new();
    for (line, p) in json_lines::<PreferenceLine>(path)? {
        if out.insert(p.reviewer.clone(), p.papers.into_iter().collect()).is_some() {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                line,
                message: format!("reviewer `{}` listed twice", p.reviewer),
            });
        }
    }
    Ok(out)
}

pub fn preferences_jsonl(prefs: &BTreeMap<String, BTreeSet<String>>) -> String {
    to_json_lines(prefs.iter().map(|(r, p)| PreferenceLine {
        reviewer: r.clone(),
        papers: p.iter().cloned().collect(),
    }))
}

pub fn read_profiles(path: &Path) -> Result<Vec<ReviewerProfile>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, r) in json_lines::<ReviewerLine>(path)? {
        if !seen.insert(r.name.clone()) {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                line,
                message: format!("reviewer `{}` listed twice", r.name),
            });
        }
        out.push(ReviewerProfile {
            name: r.name,
            homepage: r.homepage,
            papers: r.papers,
        });
    }
    Ok(out)
}

pub fn profiles_jsonl(profiles: &[ReviewerProfile]) -> String {
    to_json_lines(profiles.iter().map(|p| ReviewerLine {
        name: p.name.clone(),
        homepage: p.homepage.clone(),
        papers: p.papers.clone(),
    }))
}

/// A reviewer as crawled: homepage text and full paper texts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReviewer {
    pub name: String,
    pub homepage: String,
    pub documents: Vec<String>,
}

impl RawReviewer {
    pub fn profile(&self) -> ReviewerProfile {
        ReviewerProfile::from_documents(&self.name, &self.homepage, &self.documents)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::io(dir))?;
    paths.sort();
    Ok(paths)
}

/// Reads every reviewer sub-directory, in name order.
pub fn read_reviewers(dir: &Path) -> Result<Vec<RawReviewer>> {
    let mut out = Vec::new();
    for path in sorted_entries(dir)? {
        if !path.is_dir() {
            continue;
        }
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CliError::Data(format!("{}: reviewer directory name is not UTF-8", path.display())))?
            .to_string();
        let homepage_path = path.join("homepage.txt");
        let homepage = if homepage_path.is_file() {
            read_text(&homepage_path)?
        } else {
            String::new()
        };
        let papers_dir = path.join("papers");
        let mut documents = Vec::new();
        if papers_dir.is_dir() {
            for doc in sorted_entries(&papers_dir)? {
                if doc.extension().is_some_and(|e| e == "txt") && doc.is_file() {
                    documents.push(read_text(&doc)?);
                }
            }
        }
        out.push(RawReviewer {
            name,
            homepage,
            documents,
        });
    }
    Ok(out)
}

pub fn write_reviewers(dir: &Path, reviewers: &[RawReviewer]) -> Result<()> {
    for r in reviewers {
        let base = dir.join(&r.name);
        let papers = base.join("papers");
        fs::create_dir_all(&papers).map_err(CliError::io(&papers))?;
        let homepage = base.join("homepage.txt");
        fs::write(&homepage, &r.homepage).map_err(CliError::io(&homepage))?;
        for (i, doc) in r.documents.iter().enumerate() {
            let p = papers.join(format!("{:02}.txt", i + 1));
            fs::write(&p, doc).map_err(CliError::io(&p))?;
        }
    }
    Ok(())
}

pub fn read_stopwords(path: &Path) -> Result<Vec<String>> {
    Ok(parse_stopwords(&read_text(path)?))
}

pub fn parse_stopwords(text: &str) -> Vec<String> {
    let words: BTreeSet<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    words.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keywords_accept_string_or_list() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("papers.jsonl");
        fs::write(
            &p,
            "{\"id\":\"a\",\"title\":\"t\",\"abstract\":\"x\",\"keywords\":[\"machine learning\",\"agents\"]}\n\n{\"id\":\"b\",\"keywords\":\"planning\"}\n",
        )
        .unwrap();
        let papers = read_papers(&p).unwrap();
        assert_eq!(papers[0].keywords, "machine learning agents");
        assert_eq!(papers[1].keywords, "planning");
        assert_eq!(papers[1].abstract_text, "");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("papers.jsonl");
        fs::write(&p, "{\"id\":\"a\"}\n{\"id\":\"a\"}\n").unwrap();
        let e = read_papers(&p).unwrap_err().to_string();
        assert!(e.ends_with("papers.jsonl:2: duplicate paper id `a`"), "{e}");
        fs::write(&p, "{\"id\":\"a\"}\nnot json\n").unwrap();
        assert!(matches!(read_papers(&p), Err(CliError::Format { line: 2, .. })));
    }

    #[test]
    fn papers_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("papers.jsonl");
        let papers = vec![PaperRecord {
            id: "p1".into(),
            title: "T".into(),
            abstract_text: "A \"quoted\"".into(),
            keywords: "k l".into(),
        }];
        fs::write(&p, papers_jsonl(&papers)).unwrap();
        assert_eq!(read_papers(&p).unwrap(), papers);
    }

    #[test]
    fn reviewer_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rs = vec![
            RawReviewer {
                name: "ann".into(),
                homepage: "home".into(),
                documents: vec!["one".into(), "two".into()],
            },
            RawReviewer {
                name: "bob".into(),
                homepage: String::new(),
                documents: vec![],
            },
        ];
        write_reviewers(dir.path(), &rs).unwrap();
        fs::write(dir.path().join("stray.txt"), "ignored").unwrap();
        assert_eq!(read_reviewers(dir.path()).unwrap(), rs);
    }

    #[test]
    fn stopword_file() {
        assert_eq!(parse_stopwords("The\n# comment\nof # trailing\n\n"), ["of", "the"]);
    }
}
