use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bidmatch::error::{CliError, Result};
use bidmatch::experiment::{run_cf, run_matrix, ExperimentConfig};
use bidmatch::{report, store, synth};
use bidmatch_core::eval::{generate_synthetic, SynthConfig};
use bidmatch_core::expand::{build_plan, reviewer_descriptor, Method, ReviewerSource, RunKey, SourceSet};
use bidmatch_core::query::{execute, parse, QuerySpec};
use bidmatch_core::relation::REVIEWER;

/// Reviewer-paper recommendation by similarity joins and collaborative
/// filtering.
#[derive(Parser)]
#[command(name = "bidmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw inputs and write a store directory.
    Ingest(IngestArgs),
    /// Run one similarity query and print the ranked result as TSV.
    Query(QueryArgs),
    /// Run every content-based query and write the source-combination tables.
    Matrix(MatrixArgs),
    /// Simulate the collaborative-filtering recommenders.
    Cf(CfArgs),
    /// Generate a synthetic corpus in the raw input layout.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Papers as JSON Lines.
    #[arg(long)]
    papers: PathBuf,
    /// Directory with one sub-directory per reviewer.
    #[arg(long)]
    reviewers: PathBuf,
    /// Preferences as JSON Lines.
    #[arg(long)]
    preferences: PathBuf,
    /// Stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    store: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    store: PathBuf,
    /// Query text, or `-` to read it from standard input. Without it the
    /// query is built from --method, --reviewer-source and --sources.
    query: Option<String>,
    /// Keep only the best N rows.
    #[arg(long)]
    limit: Option<usize>,
    /// Text bound to `Reviewer.descriptor`, and the reviewer side of a built query.
    #[arg(long, default_value = "p")]
    reviewer_source: ReviewerSource,
    #[arg(long, default_value = "conjunct")]
    method: Method,
    /// Paper sources of a built query, e.g. AKT.
    #[arg(long)]
    sources: Option<SourceSet>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    store: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Seed for reviewer sampling.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Reviewers to sample.
    #[arg(long, default_value_t = 50)]
    sample: usize,
    /// Precision cutoffs.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 30])]
    top: Vec<usize>,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            sample: self.sample,
            cutoffs: self.top.clone(),
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Expansion methods to run.
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
    method: Vec<Method>,
}

#[derive(Args)]
struct CfArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Neighbours consulted by kNN.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// List the seed positive as the first recommendation.
    #[arg(long)]
    present_feedback: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    topics: usize,
    #[arg(long, default_value_t = 200)]
    papers: usize,
    #[arg(long, default_value_t = 20)]
    reviewers: usize,
    /// Words per topic vocabulary.
    #[arg(long, default_value_t = 40)]
    vocab: usize,
    /// Chance that any word is replaced by a random one.
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn query_text(arg: &str) -> Result<String> {
    if arg != "-" {
        return Ok(arg.to_string());
    }
    let mut s = String::new();
    io::stdin().read_to_string(&mut s).map_err(CliError::io("<stdin>"))?;
    Ok(s)
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let dataset = store::load(&a.store)?;
    let mut relations = dataset.relations()?;
    let reviewers = relations.get_mut(REVIEWER).map_err(CliError::data)?;
    let col = reviewers.column(reviewer_descriptor(a.reviewer_source)).map_err(CliError::data)?;
    reviewers
        .add_derived_column("descriptor", |t| t.get(col).to_string())
        .map_err(CliError::data)?;

    let q: QuerySpec = match (&a.query, a.sources) {
        (Some(text), None) => parse(&query_text(text)?)?,
        (None, Some(sources)) => {
            let plan = build_plan(RunKey::new(a.method, a.reviewer_source, sources));
            plan.prepare(&mut relations).map_err(CliError::data)?;
            plan.query
        }
        (Some(_), Some(_)) => return Err(CliError::Usage("give either query text or --sources, not both".into())),
        (None, None) => return Err(CliError::Usage("give query text or --sources".into())),
    };
    let result = execute(&q, &relations, a.limit)?;
    io::stdout()
        .write_all(result.to_tsv().as_bytes())
        .map_err(CliError::io("<stdout>"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let s = store::ingest(&a.papers, &a.reviewers, &a.preferences, a.stopwords.as_deref(), &a.store)?;
            println!("papers={} reviewers={}", s.papers, s.reviewers);
        }
        Command::Query(a) => cmd_query(a)?,
        Command::Matrix(a) => {
            let cfg = ExperimentConfig {
                methods: a.method.clone(),
                ..a.run.config()
            };
            let dataset = store::load(&a.run.store)?;
            let digest = store::digest(&a.run.store)?;
            let outcome = run_matrix(&dataset, &cfg)?;
            warn_all(&outcome.sampled.warnings);
            let manifest = report::write_matrix_outputs(&a.run.out, &outcome, &cfg, &digest)?;
            println!(
                "reviewers={} cells={} manifest={manifest}",
                outcome.sampled.reviewers.len(),
                outcome.matrices.len() * 21
            );
        }
        Command::Cf(a) => {
            let cfg = ExperimentConfig {
                k: a.k,
                present_feedback: a.present_feedback,
                ..a.run.config()
            };
            let dataset = store::load(&a.run.store)?;
            let digest = store::digest(&a.run.store)?;
            let outcome = run_cf(&dataset, &cfg)?;
            warn_all(&outcome.sampled.warnings);
            let manifest = report::write_cf_outputs(&a.run.out, &outcome, &cfg, &digest)?;
            println!("reviewers={} cells={} manifest={manifest}", outcome.sampled.reviewers.len(), outcome.cells.len());
        }
        Command::Synth(a) => {
            let cfg = SynthConfig {
                seed: a.seed,
                topics: a.topics,
                papers: a.papers,
                reviewers: a.reviewers,
                vocab_per_topic: a.vocab,
                noise: a.noise,
            };
            let corpus = generate_synthetic(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
            synth::write_corpus(&a.out, &corpus)?;
            println!("papers={} reviewers={}", corpus.papers.len(), corpus.reviewers.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
