//! Cosine scoring and argmax label assignment.
//!
//! Two classifiers share the same ranking rule:
//!
//! * [`FaithfulClassifier`] appends each query to the category corpus and
//!   refits TF-IDF from scratch, so idf values see the query document.
//! * [`IndexedClassifier`] scores queries against a prebuilt
//!   [`CategoryIndex`] whose idf was fitted on the categories alone.
//!
//! Ties (scores within [`TIE_EPSILON`]) go to the lexicographically smallest
//! code.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::preprocess::{preprocess, PipelineConfig, TokenList};
use crate::taxonomy::{rollup, CategoryDoc};
use crate::vectorize::{
    build_corpus, doc_embedding, tfidf, weighted_matrix, DocVector, IdfSnapshot,
};

pub const TIE_EPSILON: f64 = 1e-12;
pub const UNKNOWN_CODE: &str = "UNK";
pub const DEFAULT_TOP_K: usize = 5;

const INDEX_FORMAT: &str = "sitcls-category-index";
const INDEX_VERSION: u32 = 1;

/// `x.y / (|x| |y|)`, defined as 0 when either vector has zero norm.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    let (mut dot, mut xx, mut yy) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in x.iter().zip(y) {
        dot += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (xx.sqrt() * yy.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Faithful,
    Indexed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Faithful => "faithful",
            Mode::Indexed => "indexed",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "faithful" => Ok(Mode::Faithful),
            "indexed" => Ok(Mode::Indexed),
            other => Err(format!(
                "unknown mode {other:?} (expected faithful or indexed)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unclassifiable {
    /// Nothing left after preprocessing.
    EmptyQuery,
    /// No query term contributed to the query vector.
    NoKnownTerms,
}

impl fmt::Display for Unclassifiable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unclassifiable::EmptyQuery => "empty after preprocessing",
            Unclassifiable::NoKnownTerms => "no query term has a usable embedding",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub code: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub query: String,
    /// Predicted code at the label-space level, or [`UNKNOWN_CODE`].
    pub predicted_code: String,
    /// Level-1 ancestor of the predicted code, or [`UNKNOWN_CODE`].
    pub rolled_up_code: String,
    pub similarity: f64,
    pub top_k: Vec<Scored>,
    pub oov_fraction: f64,
    pub mode: Mode,
    pub unclassifiable: Option<Unclassifiable>,
}

impl ClassificationResult {
    fn classified(query: &str, ranking: Vec<Scored>, oov_fraction: f64, mode: Mode) -> Self {
        let best = &ranking[0];
        Self {
            query: query.to_string(),
            predicted_code: best.code.clone(),
            rolled_up_code: rollup(&best.code, 1).unwrap_or_else(|_| UNKNOWN_CODE.to_string()),
            similarity: best.similarity,
            top_k: ranking,
            oov_fraction,
            mode,
            unclassifiable: None,
        }
    }

    fn unclassifiable(query: &str, reason: Unclassifiable, oov_fraction: f64, mode: Mode) -> Self {
        Self {
            query: query.to_string(),
            predicted_code: UNKNOWN_CODE.to_string(),
            rolled_up_code: UNKNOWN_CODE.to_string(),
            similarity: 0.0,
            top_k: Vec::new(),
            oov_fraction,
            mode,
            unclassifiable: Some(reason),
        }
    }

    pub fn is_classified(&self) -> bool {
        self.unclassifiable.is_none()
    }
}

/// Scores `query` against every category and returns the best `top_k`
/// codes. The first element is the argmax: the highest similarity, with
/// near-ties resolved to the smallest code.
pub fn rank(
    codes: &[String],
    categories: &[DocVector],
    query: &DocVector,
    top_k: usize,
) -> Result<Vec<Scored>> {
    if codes.len() != categories.len() {
        return Err(Error::LengthMismatch(codes.len(), categories.len()));
    }
    if codes.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let scores = categories
        .iter()
        .map(|c| cosine(&c.values, &query.values))
        .collect::<Result<Vec<f64>>>()?;

    let best_score = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = (0..codes.len())
        .filter(|&i| best_score - scores[i] <= TIE_EPSILON)
        .min_by(|&a, &b| codes[a].cmp(&codes[b]))
        .expect("at least one category");

    let mut rest: Vec<usize> = (0..codes.len()).filter(|&i| i != best).collect();
    let by_score = |a: &usize, b: &usize| {
        scores[*b]
            .total_cmp(&scores[*a])
            .then_with(|| codes[*a].cmp(&codes[*b]))
    };
    let keep = top_k.max(1) - 1;
    if rest.len() > keep {
        rest.select_nth_unstable_by(keep, by_score);
        rest.truncate(keep);
    }
    rest.sort_unstable_by(by_score);

    Ok(std::iter::once(best)
        .chain(rest)
        .map(|i| Scored {
            code: codes[i].clone(),
            similarity: scores[i],
        })
        .collect())
}

fn distinct_terms(tokens: &TokenList) -> usize {
    let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

pub trait Classifier: Sync {
    fn classify(&self, query: &str) -> ClassificationResult;
    fn mode(&self) -> Mode;
}

/// Per-query TF-IDF refit over categories plus the query document.
pub struct FaithfulClassifier<'a> {
    codes: Vec<String>,
    category_tokens: Vec<TokenList>,
    table: &'a EmbeddingTable,
    cfg: PipelineConfig,
    average: bool,
    top_k: usize,
}

impl<'a> FaithfulClassifier<'a> {
    pub fn new(
        tax_docs: &[CategoryDoc],
        table: &'a EmbeddingTable,
        cfg: PipelineConfig,
        average: bool,
        top_k: usize,
    ) -> Result<Self> {
        if tax_docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            codes: tax_docs.iter().map(|d| d.code.clone()).collect(),
            category_tokens: tax_docs
                .iter()
                .map(|d| preprocess(&d.heading, &cfg))
                .collect(),
            table,
            cfg,
            average,
            top_k: top_k.max(1),
        })
    }

    /// Category rows and the query row of the weighted embedding matrix for
    /// a corpus of all categories followed by `query`.
    pub fn weighted_rows(&self, query: &TokenList) -> (Vec<DocVector>, DocVector) {
        let mut docs = self.category_tokens.clone();
        docs.push(query.clone());
        let model = tfidf(build_corpus(&docs).expect("non-empty corpus"));
        let last = model.num_docs() - 1;
        let categories = (0..last)
            .map(|d| doc_embedding(&model, d, self.table, self.average))
            .collect();
        let query = doc_embedding(&model, last, self.table, self.average);
        (categories, query)
    }
}

impl Classifier for FaithfulClassifier<'_> {
    fn classify(&self, query: &str) -> ClassificationResult {
        let tokens = preprocess(query, &self.cfg);
        if tokens.is_empty() {
            return ClassificationResult::unclassifiable(
                query,
                Unclassifiable::EmptyQuery,
                0.0,
                Mode::Faithful,
            );
        }
        let (categories, qv) = self.weighted_rows(&tokens);
        let oov_fraction = qv.oov_terms as f64 / distinct_terms(&tokens) as f64;
        if qv.is_zero() {
            return ClassificationResult::unclassifiable(
                query,
                Unclassifiable::NoKnownTerms,
                oov_fraction,
                Mode::Faithful,
            );
        }
        let ranking = rank(&self.codes, &categories, &qv, self.top_k).expect("aligned categories");
        ClassificationResult::classified(query, ranking, oov_fraction, Mode::Faithful)
    }

    fn mode(&self) -> Mode {
        Mode::Faithful
    }
}

pub fn classify_faithful(
    query: &str,
    tax_docs: &[CategoryDoc],
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    average: bool,
    top_k: usize,
) -> Result<ClassificationResult> {
    Ok(FaithfulClassifier::new(tax_docs, table, cfg.clone(), average, top_k)?.classify(query))
}

/// Category vectors precomputed with idf fitted on the categories only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryIndex {
    format: String,
    version: u32,
    dim: usize,
    embedding_fingerprint: String,
    average: bool,
    pipeline: PipelineConfig,
    codes: Vec<String>,
    headings: Vec<String>,
    snapshot: IdfSnapshot,
    vectors: Vec<DocVector>,
}

/// Summary numbers printed after an index build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSummary {
    pub categories: usize,
    pub dim: usize,
    pub vocab_size: usize,
    pub oov_heading_terms: usize,
}

pub fn build_index(
    tax_docs: &[CategoryDoc],
    table: &EmbeddingTable,
    cfg: &PipelineConfig,
    average: bool,
) -> Result<CategoryIndex> {
    if tax_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let tokens: Vec<TokenList> = tax_docs
        .iter()
        .map(|d| preprocess(&d.heading, cfg))
        .collect();
    let model = tfidf(build_corpus(&tokens)?);
    let vectors = weighted_matrix(&model, table, average);
    let snapshot = model.snapshot();
    Ok(CategoryIndex {
        format: INDEX_FORMAT.to_string(),
        version: INDEX_VERSION,
        dim: table.dim(),
        embedding_fingerprint: embedding_fingerprint(table, snapshot.vocab()),
        average,
        pipeline: cfg.clone(),
        codes: tax_docs.iter().map(|d| d.code.clone()).collect(),
        headings: tax_docs.iter().map(|d| d.heading.clone()).collect(),
        snapshot,
        vectors,
    })
}

/// SHA-256 over the dimension and the embedding of every vocabulary term
/// (or its absence), in vocabulary order.
pub fn embedding_fingerprint(table: &EmbeddingTable, vocab: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((table.dim() as u64).to_le_bytes());
    for term in vocab {
        hasher.update(term.as_bytes());
        hasher.update([0u8]);
        match table.lookup(term) {
            Some(v) => {
                hasher.update([1u8]);
                for x in v {
                    hasher.update(x.to_bits().to_le_bytes());
                }
            }
            None => hasher.update([0u8]),
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl CategoryIndex {
    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn headings(&self) -> &[String] {
        &self.headings
    }

    pub fn vectors(&self) -> &[DocVector] {
        &self.vectors
    }

    pub fn snapshot(&self) -> &IdfSnapshot {
        &self.snapshot
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn average(&self) -> bool {
        self.average
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn summary(&self, table: &EmbeddingTable) -> IndexSummary {
        let vocab = self.snapshot.vocab();
        IndexSummary {
            categories: self.codes.len(),
            dim: self.dim,
            vocab_size: vocab.len(),
            oov_heading_terms: vocab.iter().filter(|t| !table.contains(t)).count(),
        }
    }

    /// Fails when `table` is not the embedding file the index was built from.
    pub fn verify(&self, table: &EmbeddingTable) -> Result<()> {
        if table.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, table.dim()));
        }
        let actual = embedding_fingerprint(table, self.snapshot.vocab());
        if actual != self.embedding_fingerprint {
            return Err(Error::IndexMismatch {
                expected: self.embedding_fingerprint.clone(),
                actual,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let index: CategoryIndex =
            serde_json::from_str(text).map_err(|e| Error::IndexFormat(e.to_string()))?;
        if index.format != INDEX_FORMAT {
            return Err(Error::IndexFormat(format!(
                "unexpected format tag {:?}",
                index.format
            )));
        }
        if index.version != INDEX_VERSION {
            return Err(Error::IndexFormat(format!(
                "unsupported version {} (expected {INDEX_VERSION})",
                index.version
            )));
        }
        if index.codes.is_empty()
            || index.codes.len() != index.vectors.len()
            || index.codes.len() != index.headings.len()
            || index.vectors.iter().any(|v| v.values.len() != index.dim)
        {
            return Err(Error::IndexFormat("inconsistent category vectors".into()));
        }
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Scores queries against a [`CategoryIndex`] using its frozen idf and the
/// pipeline configuration it was built with.
pub struct IndexedClassifier<'a> {
    index: &'a CategoryIndex,
    table: &'a EmbeddingTable,
    top_k: usize,
}

impl<'a> IndexedClassifier<'a> {
    pub fn new(index: &'a CategoryIndex, table: &'a EmbeddingTable, top_k: usize) -> Result<Self> {
        index.verify(table)?;
        Ok(Self {
            index,
            table,
            top_k: top_k.max(1),
        })
    }

    pub fn query_vector(&self, query: &str) -> (TokenList, DocVector) {
        let tokens = preprocess(query, &self.index.pipeline);
        let v = self
            .index
            .snapshot
            .embed(&tokens, self.table, self.index.average);
        (tokens, v)
    }
}

impl Classifier for IndexedClassifier<'_> {
    fn classify(&self, query: &str) -> ClassificationResult {
        let (tokens, qv) = self.query_vector(query);
        if tokens.is_empty() {
            return ClassificationResult::unclassifiable(
                query,
                Unclassifiable::EmptyQuery,
                0.0,
                Mode::Indexed,
            );
        }
        let oov_fraction = qv.oov_terms as f64 / distinct_terms(&tokens) as f64;
        if qv.is_zero() {
            return ClassificationResult::unclassifiable(
                query,
                Unclassifiable::NoKnownTerms,
                oov_fraction,
                Mode::Indexed,
            );
        }
        let ranking =
            rank(&self.index.codes, &self.index.vectors, &qv, self.top_k).expect("aligned index");
        ClassificationResult::classified(query, ranking, oov_fraction, Mode::Indexed)
    }

    fn mode(&self) -> Mode {
        Mode::Indexed
    }
}

pub fn classify_indexed(
    query: &str,
    index: &CategoryIndex,
    table: &EmbeddingTable,
    top_k: usize,
) -> Result<ClassificationResult> {
    Ok(IndexedClassifier::new(index, table, top_k)?.classify(query))
}

/// Classifies `queries` on `jobs` worker threads. Output order matches input
/// order; `progress` is called with (completed, total) after each query.
pub fn classify_batch<C: Classifier + ?Sized>(
    queries: &[String],
    classifier: &C,
    jobs: usize,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Vec<ClassificationResult> {
    let total = queries.len();
    let done = AtomicUsize::new(0);
    let run = || {
        queries
            .par_iter()
            .map(|q| {
                let r = classifier.classify(q);
                if let Some(report) = progress {
                    report(done.fetch_add(1, AtomicOrdering::Relaxed) + 1, total);
                }
                r
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}
