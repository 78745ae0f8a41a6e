//! Content-based and collaborative paper recommendation for reviewers.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the persisted
//! store and the command line live in the `bidmatch` crate.
//!
//! - [`textpipe`]: tokenizing, Porter stemming, TFIDF vectors, cosine.
//! - [`relation`]: text relations with per-column corpus statistics.
//! - [`query`]: `SELECT .. FROM .. WHERE a SIM b AND ..` similarity joins.
//! - [`expand`]: the concat and conjunct query families over paper and
//!   reviewer sources.
//! - [`cf`]: kNN and Extended Direct Bayes recommenders with the online
//!   feedback simulation.
//! - [`eval`]: precision at N, source matrices, sign tests and impact analyses.
//! - [`synth`]: seeded synthetic corpora with planted preferences.
#![no_std]

extern crate alloc;

pub mod cf;
pub mod eval;
pub mod expand;
mod porter;
pub mod query;
pub mod relation;
pub mod synth;
pub mod textpipe;
