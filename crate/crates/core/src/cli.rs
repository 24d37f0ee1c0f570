//! Command-line surface: `build-index`, `classify`, `evaluate` and
//! `make-fixtures`.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use crate::classify::{
    build_index, classify_batch, CategoryIndex, ClassificationResult, FaithfulClassifier,
    IndexedClassifier, Mode, DEFAULT_TOP_K,
};
use crate::embeddings::EmbeddingTable;
use crate::eval::{evaluate, load_test_set, mode_agreement, summary_text, write_report_csv};
use crate::fixtures::{FixtureSet, DEFAULT_QUERIES, DEFAULT_SEED};
use crate::preprocess::{load_stopwords, PipelineConfig};
use crate::taxonomy::{CategoryDoc, Taxonomy};
use crate::vectorize::DocVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sitcls",
    version,
    about = "Zero-shot text classification against a code taxonomy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Precompute category vectors and write a reusable index file.
    BuildIndex(BuildIndexArgs),
    /// Classify a single query or a file of queries.
    Classify(ClassifyArgs),
    /// Classify a labelled test set and report accuracy.
    Evaluate(EvaluateArgs),
    /// Write the synthetic taxonomy, embeddings and labelled queries.
    MakeFixtures(MakeFixturesArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Stopword override file (one word per line, `#` comments).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Divide document vectors by their tf-idf mass (default).
    #[arg(long, conflicts_with = "sum")]
    pub average: bool,
    /// Keep the raw tf-idf weighted sum.
    #[arg(long)]
    pub sum: bool,
    /// Taxonomy levels forming the label space, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub levels: Vec<u8>,
}

impl PipelineArgs {
    fn average(&self) -> bool {
        !self.sum
    }

    fn pipeline(&self) -> anyhow::Result<PipelineConfig> {
        let cfg = PipelineConfig::default();
        match &self.stopwords {
            Some(path) => Ok(cfg.with_stopwords(load_stopwords(path)?)?),
            None => Ok(cfg),
        }
    }

    fn levels(&self) -> BTreeSet<u8> {
        self.levels.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// GloVe-format embedding file.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Taxonomy CSV (level,code,heading).
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Prebuilt index from `build-index` (indexed mode).
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long, default_value = "indexed")]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_TOP_K, value_parser = parse_top_k)]
    pub top_k: usize,
    /// Worker threads for batch classification.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub taxonomy: PathBuf,
    /// Index file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the category vectors as CSV.
    #[arg(long)]
    pub dump_vectors: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Queries: text file with one query per line, or CSV with a `content` column.
    #[arg(long, conflicts_with = "query", required_unless_present = "query")]
    pub input: Option<PathBuf>,
    /// A single query string.
    #[arg(long)]
    pub query: Option<String>,
    /// Results CSV (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the query vectors as CSV.
    #[arg(long)]
    pub dump_vectors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Labelled CSV with `content` and `gold_level1` columns.
    #[arg(long)]
    pub test: PathBuf,
    /// Per-instance report CSV (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the plain-text summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Skip the faithful-vs-indexed agreement run.
    #[arg(long)]
    pub no_agreement: bool,
}

#[derive(Debug, Args)]
pub struct MakeFixturesArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of labelled queries.
    #[arg(long, default_value_t = DEFAULT_QUERIES)]
    pub queries: usize,
}

fn parse_top_k(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

/// A failed command and the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Input(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildIndex(args) => cmd_build_index(&args),
        Command::Classify(args) => cmd_classify(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::MakeFixtures(args) => cmd_make_fixtures(&args),
    }
}

fn load_embeddings(path: &Path) -> anyhow::Result<EmbeddingTable> {
    EmbeddingTable::load(path).with_context(|| format!("loading embeddings {}", path.display()))
}

fn load_category_docs(path: &Path, levels: &BTreeSet<u8>) -> anyhow::Result<Vec<CategoryDoc>> {
    let tax =
        Taxonomy::load(path).with_context(|| format!("loading taxonomy {}", path.display()))?;
    for w in tax.warnings() {
        eprintln!("warning: {w}");
    }
    let counts: Vec<String> = tax
        .level_counts()
        .iter()
        .map(|(level, n)| format!("L{level}={n}"))
        .collect();
    eprintln!("taxonomy: {} entries ({})", tax.len(), counts.join(" "));
    Ok(tax.category_documents(levels)?)
}

fn create_output(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn output_writer(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create_output(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `doc_id,d0,...` rows with six-decimal floats.
pub fn write_vectors<W: Write>(
    rows: impl IntoIterator<Item = (String, DocVector)>,
    dim: usize,
    writer: W,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["doc_id".to_string()];
    header.extend((0..dim).map(|i| format!("d{i}")));
    w.write_record(&header)?;
    for (id, v) in rows {
        let mut record = vec![id];
        record.extend(v.values.iter().map(|x| format!("{x:.6}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_build_index(args: &BuildIndexArgs) -> Result<(), CliError> {
    let cfg = args.pipeline.pipeline()?;
    let docs = load_category_docs(&args.taxonomy, &args.pipeline.levels())?;
    let table = load_embeddings(&args.embeddings)?;
    let index =
        build_index(&docs, &table, &cfg, args.pipeline.average()).map_err(anyhow::Error::from)?;
    index
        .save(&args.output)
        .with_context(|| format!("writing index {}", args.output.display()))?;
    if let Some(path) = &args.dump_vectors {
        let rows = index
            .codes()
            .iter()
            .cloned()
            .zip(index.vectors().iter().cloned());
        write_vectors(rows, index.dim(), create_output(path)?)?;
    }
    let s = index.summary(&table);
    eprintln!(
        "index: {} categories, dim {}, vocabulary {} terms, {} heading terms without embeddings",
        s.categories, s.dim, s.vocab_size, s.oov_heading_terms
    );
    Ok(())
}

/// Engine state shared by `classify` and `evaluate`.
pub struct Engine {
    pub table: EmbeddingTable,
    pub index: Option<CategoryIndex>,
    pub docs: Vec<CategoryDoc>,
    pub cfg: PipelineConfig,
    pub average: bool,
    pub top_k: usize,
    pub mode: Mode,
    pub jobs: usize,
}

impl Engine {
    pub fn load(args: &ModelArgs) -> Result<Self, CliError> {
        if args.index.is_none() && args.taxonomy.is_none() {
            return Err(CliError::Usage(
                "one of --index or --taxonomy is required".into(),
            ));
        }
        let table = load_embeddings(&args.embeddings)?;
        let jobs = args
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        let mut engine = Engine {
            table,
            index: None,
            docs: Vec::new(),
            cfg: args.pipeline.pipeline()?,
            average: args.pipeline.average(),
            top_k: args.top_k,
            mode: args.mode,
            jobs,
        };
        if let Some(path) = &args.index {
            let index = CategoryIndex::load(path)
                .with_context(|| format!("loading index {}", path.display()))?;
            index
                .verify(&engine.table)
                .with_context(|| format!("index {} does not match --embeddings", path.display()))?;
            engine.cfg = index.pipeline().clone();
            engine.average = index.average();
            engine.docs = index
                .codes()
                .iter()
                .zip(index.headings())
                .map(|(code, heading)| CategoryDoc {
                    code: code.clone(),
                    heading: heading.clone(),
                })
                .collect();
            engine.index = Some(index);
        } else if let Some(path) = &args.taxonomy {
            engine.docs = load_category_docs(path, &args.pipeline.levels())?;
        }
        Ok(engine)
    }

    fn ensure_index(&mut self) -> anyhow::Result<()> {
        if self.index.is_none() {
            self.index = Some(build_index(
                &self.docs,
                &self.table,
                &self.cfg,
                self.average,
            )?);
        }
        Ok(())
    }

    /// Runs `queries` in `mode`, preserving input order.
    pub fn classify(
        &mut self,
        queries: &[String],
        mode: Mode,
    ) -> anyhow::Result<Vec<ClassificationResult>> {
        let progress = progress_reporter(queries.len());
        let progress = progress
            .as_ref()
            .map(|p| p as &(dyn Fn(usize, usize) + Sync));
        match mode {
            Mode::Indexed => {
                self.ensure_index()?;
                let index = self.index.as_ref().expect("index built");
                let classifier = IndexedClassifier::new(index, &self.table, self.top_k)?;
                Ok(classify_batch(queries, &classifier, self.jobs, progress))
            }
            Mode::Faithful => {
                let classifier = FaithfulClassifier::new(
                    &self.docs,
                    &self.table,
                    self.cfg.clone(),
                    self.average,
                    self.top_k,
                )?;
                Ok(classify_batch(queries, &classifier, self.jobs, progress))
            }
        }
    }

    /// Query vectors as used by `mode`, for `--dump-vectors`.
    fn query_vectors(&mut self, queries: &[String]) -> anyhow::Result<Vec<DocVector>> {
        match self.mode {
            Mode::Indexed => {
                self.ensure_index()?;
                let index = self.index.as_ref().expect("index built");
                let classifier = IndexedClassifier::new(index, &self.table, self.top_k)?;
                Ok(queries
                    .iter()
                    .map(|q| classifier.query_vector(q).1)
                    .collect())
            }
            Mode::Faithful => {
                let classifier = FaithfulClassifier::new(
                    &self.docs,
                    &self.table,
                    self.cfg.clone(),
                    self.average,
                    self.top_k,
                )?;
                Ok(queries
                    .iter()
                    .map(|q| {
                        let tokens = crate::preprocess::preprocess(q, &self.cfg);
                        classifier.weighted_rows(&tokens).1
                    })
                    .collect())
            }
        }
    }
}

/// Prints a progress line to stderr every 10% for batches large enough to
/// take noticeable time.
fn progress_reporter(total: usize) -> Option<impl Fn(usize, usize) + Sync> {
    (total >= 10_000).then_some({
        move |done: usize, total: usize| {
            if done.is_multiple_of((total / 10).max(1)) {
                eprintln!("classified {done}/{total}");
            }
        }
    })
}

/// Reads queries from a text file (one per line) or a CSV with a `content`
/// column.
pub fn read_queries(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return Ok(text.lines().map(str::to_string).collect());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h.trim() == "content")
        .ok_or_else(|| anyhow!("{}: missing column \"content\"", path.display()))?;
    rdr.records()
        .enumerate()
        .map(|(i, r)| {
            let r = r.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
            Ok(r.get(col).unwrap_or_default().to_string())
        })
        .collect()
}

pub const RESULT_COLUMNS: [&str; 8] = [
    "content",
    "predicted_code",
    "level1_code",
    "similarity",
    "oov_fraction",
    "mode",
    "reason",
    "top_k",
];

pub fn write_results<W: Write>(results: &[ClassificationResult], writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULT_COLUMNS)?;
    for r in results {
        let top_k = r
            .top_k
            .iter()
            .map(|s| format!("{}:{:.6}", s.code, s.similarity))
            .collect::<Vec<_>>()
            .join("|");
        w.write_record([
            r.query.as_str(),
            &r.predicted_code,
            &r.rolled_up_code,
            &format!("{:.6}", r.similarity),
            &format!("{:.6}", r.oov_fraction),
            &r.mode.to_string(),
            &r.unclassifiable.map(|u| u.to_string()).unwrap_or_default(),
            &top_k,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let queries = match (&args.input, &args.query) {
        (Some(path), _) => read_queries(path)?,
        (None, Some(q)) => vec![q.clone()],
        (None, None) => {
            return Err(CliError::Usage(
                "one of --input or --query is required".into(),
            ))
        }
    };
    let mut engine = Engine::load(&args.model)?;
    let mode = engine.mode;
    let results = engine.classify(&queries, mode)?;
    write_results(&results, output_writer(args.output.as_deref())?)?;
    if let Some(path) = &args.dump_vectors {
        let vectors = engine.query_vectors(&queries)?;
        let rows = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i.to_string(), v));
        write_vectors(rows, engine.table.dim(), create_output(path)?)?;
    }
    let unclassified = results.iter().filter(|r| !r.is_classified()).count();
    eprintln!(
        "classified {} queries in {mode} mode ({unclassified} unclassifiable)",
        results.len()
    );
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let test = load_test_set(&args.test)
        .with_context(|| format!("loading test set {}", args.test.display()))?;
    if test.is_empty() {
        return Err(CliError::Input(anyhow!(
            "{}: test set is empty",
            args.test.display()
        )));
    }
    let mut engine = Engine::load(&args.model)?;
    let queries: Vec<String> = test.iter().map(|t| t.content.clone()).collect();
    let mode = engine.mode;
    let results = engine.classify(&queries, mode)?;
    let report = evaluate(&test, &results).map_err(anyhow::Error::from)?;

    let agreement = if args.no_agreement {
        None
    } else {
        let other = match mode {
            Mode::Indexed => Mode::Faithful,
            Mode::Faithful => Mode::Indexed,
        };
        let other_results = engine.classify(&queries, other)?;
        Some(mode_agreement(&results, &other_results).map_err(anyhow::Error::from)?)
    };

    write_report_csv(&report, output_writer(args.output.as_deref())?)
        .map_err(anyhow::Error::from)?;
    let summary = format!(
        "mode           {mode}\n{}",
        summary_text(&report, agreement)
    );
    eprint!("{summary}");
    if let Some(path) = &args.summary {
        fs::write(path, &summary).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn cmd_make_fixtures(args: &MakeFixturesArgs) -> Result<(), CliError> {
    if args.queries == 0 {
        return Err(CliError::Usage("--queries must be at least 1".into()));
    }
    let set = FixtureSet::generate(args.seed);
    let paths = set
        .write(&args.out_dir, args.queries)
        .with_context(|| format!("writing fixtures to {}", args.out_dir.display()))?;
    eprintln!(
        "wrote {}, {}, {}",
        paths.taxonomy.display(),
        paths.embeddings.display(),
        paths.queries.display()
    );
    Ok(())
}
