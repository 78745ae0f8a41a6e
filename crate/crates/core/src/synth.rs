//! Seeded synthetic corpora with planted topical structure.
//!
//! Every topic owns a disjoint vocabulary of pronounceable pseudo-words that
//! the stemmer leaves intact. Papers are written from one topic, reviewers
//! from one or two, and a reviewer prefers most (not all) papers of its own
//! topics. A noise rate replaces each word, independently, with one drawn
//! uniformly from the union vocabulary, so at noise 1 text carries no topic
//! signal at all.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::relation::{PaperRecord, ReviewerProfile};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const ENDINGS: &[u8] = b"ao";

const TITLE_WORDS: usize = 7;
const ABSTRACT_WORDS: usize = 40;
const KEYWORDS_PER_PAPER: usize = 3;
const KEYWORDS_PER_TOPIC: usize = 10;
const HOMEPAGE_WORDS_PER_TOPIC: usize = 60;
const DOCUMENT_WORDS: usize = 350;
/// Chance that a topical paper is left out of a reviewer's preferences.
const RECALL_GAP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("need at least 2 topics, got {0}")]
    Topics(usize),
    #[error("need at least 20 papers, got {0}")]
    Papers(usize),
    #[error("need at least 4 reviewers, got {0}")]
    Reviewers(usize),
    #[error("need at least {KEYWORDS_PER_TOPIC} words per topic, got {0}")]
    Vocabulary(usize),
    #[error("noise rate must lie in [0, 1], got {0}")]
    Noise(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub topics: usize,
    pub papers: usize,
    pub reviewers: usize,
    pub vocab_per_topic: usize,
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            topics: 5,
            papers: 200,
            reviewers: 20,
            vocab_per_topic: 40,
            noise: 0.3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.topics < 2 {
            return Err(SynthError::Topics(self.topics));
        }
        if self.papers < 20 {
            return Err(SynthError::Papers(self.papers));
        }
        if self.reviewers < 4 {
            return Err(SynthError::Reviewers(self.reviewers));
        }
        if self.vocab_per_topic < KEYWORDS_PER_TOPIC {
            return Err(SynthError::Vocabulary(self.vocab_per_topic));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(SynthError::Noise(self.noise));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPaper {
    pub record: PaperRecord,
    pub topic: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthReviewer {
    pub name: String,
    pub topics: Vec<usize>,
    pub homepage: String,
    /// Full text of the reviewer's own papers.
    pub documents: Vec<String>,
}

impl SynthReviewer {
    pub fn profile(&self) -> ReviewerProfile {
        ReviewerProfile::from_documents(&self.name, &self.homepage, &self.documents)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub vocabularies: Vec<Vec<String>>,
    pub papers: Vec<SynthPaper>,
    pub reviewers: Vec<SynthReviewer>,
    /// Reviewer name to preferred paper ids, both ascending.
    pub preferences: BTreeMap<String, BTreeSet<String>>,
}

impl SynthCorpus {
    pub fn paper_records(&self) -> Vec<PaperRecord> {
        self.papers.iter().map(|p| p.record.clone()).collect()
    }

    pub fn profiles(&self) -> Vec<ReviewerProfile> {
        self.reviewers.iter().map(SynthReviewer::profile).collect()
    }
}

struct Writer<'a> {
    rng: ChaCha8Rng,
    vocab: &'a [Vec<String>],
    all: Vec<&'a str>,
    noise: f64,
}

impl Writer<'_> {
    fn word(&mut self, topic: usize) -> &str {
        if self.noise > 0.0 && self.rng.random_bool(self.noise) {
            self.all[self.rng.random_range(0..self.all.len())]
        } else {
            let v = &self.vocab[topic];
            &v[self.rng.random_range(0..v.len())]
        }
    }

    fn text(&mut self, topics: &[usize], words: usize) -> String {
        let mut out = String::new();
        for i in 0..words {
            let topic = topics[i % topics.len()];
            let w = self.word(topic);
            if i > 0 {
                out.push(' ');
            }
            out.push_str(w);
        }
        out
    }
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for s in 0..syllables {
        w.push(char::from(*CONSONANTS.choose(rng).expect("non-empty")));
        let vowels = if s + 1 == syllables { ENDINGS } else { VOWELS };
        w.push(char::from(*vowels.choose(rng).expect("non-empty")));
    }
    w
}

fn vocabularies(rng: &mut ChaCha8Rng, topics: usize, per_topic: usize) -> Vec<Vec<String>> {
    let mut seen = BTreeSet::new();
    (0..topics)
        .map(|_| {
            let mut words = Vec::with_capacity(per_topic);
            while words.len() < per_topic {
                let w = pseudo_word(rng);
                if crate::textpipe::stem(&w) == w && seen.insert(w.clone()) {
                    words.push(w);
                }
            }
            words
        })
        .collect()
}

fn id_width(count: usize, min: usize) -> usize {
    format!("{count}").len().max(min)
}

/// Builds a corpus fully determined by `config`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = vocabularies(&mut rng, config.topics, config.vocab_per_topic);
    let text_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut w = Writer {
        rng: text_rng,
        vocab: &vocab,
        all: vocab.iter().flatten().map(String::as_str).collect(),
        noise: config.noise,
    };

    let mut paper_topics: Vec<usize> = (0..config.papers).map(|i| i % config.topics).collect();
    paper_topics.shuffle(&mut rng);
    let pw = id_width(config.papers, 4);
    let papers: Vec<SynthPaper> = paper_topics
        .iter()
        .enumerate()
        .map(|(i, &topic)| {
            let title = w.text(&[topic], TITLE_WORDS);
            let abstract_text = w.text(&[topic], ABSTRACT_WORDS);
            let mut keywords: Vec<&str> = Vec::with_capacity(KEYWORDS_PER_PAPER);
            let pool = &vocab[topic][..KEYWORDS_PER_TOPIC];
            let picks = rand::seq::index::sample(&mut rng, pool.len(), KEYWORDS_PER_PAPER);
            for k in picks {
                let noisy = config.noise > 0.0 && w.rng.random_bool(config.noise);
                keywords.push(if noisy {
                    w.all[w.rng.random_range(0..w.all.len())]
                } else {
                    &pool[k]
                });
            }
            SynthPaper {
                record: PaperRecord {
                    id: format!("p{:0pw$}", i + 1),
                    title,
                    abstract_text,
                    keywords: keywords.join(" "),
                },
                topic,
            }
        })
        .collect();

    let rw = id_width(config.reviewers, 3);
    let mut reviewers = Vec::with_capacity(config.reviewers);
    let mut preferences = BTreeMap::new();
    for i in 0..config.reviewers {
        let name = format!("r{:0rw$}", i + 1);
        let first = rng.random_range(0..config.topics);
        let mut topics = alloc::vec![first];
        if rng.random_bool(0.5) {
            let second = (first + rng.random_range(1..config.topics)) % config.topics;
            topics.push(second);
        }
        let homepage = w.text(&topics, HOMEPAGE_WORDS_PER_TOPIC * topics.len());
        let mut documents = Vec::new();
        for &t in &topics {
            for _ in 0..rng.random_range(1..=2) {
                documents.push(w.text(&[t], DOCUMENT_WORDS));
            }
        }
        let mut liked: BTreeSet<String> = papers
            .iter()
            .filter(|p| topics.contains(&p.topic) && !rng.random_bool(RECALL_GAP))
            .map(|p| p.record.id.clone())
            .collect();
        if liked.is_empty() {
            if let Some(p) = papers.iter().find(|p| topics.contains(&p.topic)) {
                liked.insert(p.record.id.clone());
            }
        }
        preferences.insert(name.clone(), liked);
        reviewers.push(SynthReviewer {
            name,
            topics,
            homepage,
            documents,
        });
    }

    Ok(SynthCorpus {
        vocabularies: vocab,
        papers,
        reviewers,
        preferences,
    })
}
