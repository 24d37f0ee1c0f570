//! TF-IDF term-document weights and TF-IDF weighted document embeddings.
//!
//! A document's embedding is `sum_t weight(t, d) * E[t]` over its distinct
//! terms, optionally divided by the total weight of the terms that have an
//! embedding. Only the sparse form is computed; the dense `m x n x l`
//! per-term tensor is never built.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::preprocess::TokenList;

#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<Vec<usize>>,
    vocab: Vec<String>,
    term_index: HashMap<String, usize>,
}

impl Corpus {
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_terms(&self) -> usize {
        self.vocab.len()
    }

    /// Distinct terms ordered by first appearance.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.term_index.get(term).copied()
    }

    /// Term ids of document `doc`, in token order.
    pub fn doc(&self, doc: usize) -> &[usize] {
        &self.docs[doc]
    }
}

pub fn build_corpus(docs: &[TokenList]) -> Result<Corpus> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut vocab = Vec::new();
    let mut term_index = HashMap::new();
    let docs = docs
        .iter()
        .map(|tokens| {
            tokens
                .iter()
                .map(|t| {
                    *term_index.entry(t.clone()).or_insert_with(|| {
                        vocab.push(t.clone());
                        vocab.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    Ok(Corpus {
        docs,
        vocab,
        term_index,
    })
}

/// Smoothed inverse document frequency, `ln((1 + m) / (1 + df)) + 1`.
pub fn smoothed_idf(num_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + num_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

#[derive(Debug, Clone)]
pub struct TfIdfModel {
    corpus: Corpus,
    doc_freq: Vec<usize>,
    idf: Vec<f64>,
    // (term id, weight), distinct terms in first-appearance order
    rows: Vec<Vec<(usize, f64)>>,
}

pub fn tfidf(corpus: Corpus) -> TfIdfModel {
    let n = corpus.num_terms();
    let m = corpus.num_docs();
    let mut doc_freq = vec![0usize; n];
    let mut counts: Vec<Vec<(usize, usize)>> = Vec::with_capacity(m);
    for doc in &corpus.docs {
        let mut row: Vec<(usize, usize)> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for &term in doc {
            match slot.get(&term) {
                Some(&i) => row[i].1 += 1,
                None => {
                    slot.insert(term, row.len());
                    row.push((term, 1));
                }
            }
        }
        for &(term, _) in &row {
            doc_freq[term] += 1;
        }
        counts.push(row);
    }
    let idf: Vec<f64> = doc_freq.iter().map(|&df| smoothed_idf(m, df)).collect();
    let rows = counts
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(term, tf)| (term, tf as f64 * idf[term]))
                .collect()
        })
        .collect();
    TfIdfModel {
        corpus,
        doc_freq,
        idf,
        rows,
    }
}

impl TfIdfModel {
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn num_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.corpus.term_index(term).map(|i| self.doc_freq[i])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.corpus.term_index(term).map(|i| self.idf[i])
    }

    /// tf-idf weight of `term` in `doc`; zero when absent.
    pub fn weight(&self, doc: usize, term: &str) -> f64 {
        self.corpus
            .term_index(term)
            .and_then(|t| self.rows[doc].iter().find(|(id, _)| *id == t))
            .map_or(0.0, |&(_, w)| w)
    }

    /// Sparse row `doc` as (term, weight) pairs in first-appearance order.
    pub fn row(&self, doc: usize) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.rows[doc]
            .iter()
            .map(move |&(t, w)| (self.corpus.vocab[t].as_str(), w))
    }

    /// Multiplies every weight of one document by `factor`.
    pub fn scale_row(mut self, doc: usize, factor: f64) -> Self {
        for (_, w) in &mut self.rows[doc] {
            *w *= factor;
        }
        self
    }

    /// Freezes vocabulary and idf for vectorizing unseen documents.
    pub fn snapshot(&self) -> IdfSnapshot {
        IdfSnapshot::new(self.corpus.vocab.clone(), self.idf.clone())
    }
}

/// One row of the weighted document embedding matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub values: Vec<f64>,
    /// Total tf-idf weight of terms that had an embedding.
    pub weight_mass: f64,
    /// Distinct terms skipped because the embedding table lacks them.
    pub oov_terms: usize,
}

impl DocVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            weight_mass: 0.0,
            oov_terms: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weight_mass == 0.0 || self.values.iter().all(|&v| v == 0.0)
    }
}

fn accumulate<'a>(
    weights: impl Iterator<Item = (&'a str, f64)>,
    table: &EmbeddingTable,
    average: bool,
) -> DocVector {
    let mut out = DocVector::zeros(table.dim());
    for (term, weight) in weights {
        match table.lookup(term) {
            Some(vector) => {
                for (acc, &x) in out.values.iter_mut().zip(vector) {
                    *acc += weight * f64::from(x);
                }
                out.weight_mass += weight;
            }
            None => out.oov_terms += 1,
        }
    }
    if average && out.weight_mass > 0.0 {
        let mass = out.weight_mass;
        out.values.iter_mut().for_each(|v| *v /= mass);
    }
    if out.weight_mass == 0.0 {
        out.values.iter_mut().for_each(|v| *v = 0.0);
    }
    out
}

pub fn doc_embedding(
    model: &TfIdfModel,
    doc_index: usize,
    table: &EmbeddingTable,
    average: bool,
) -> DocVector {
    accumulate(model.row(doc_index), table, average)
}

/// All rows of the weighted embedding matrix, computed in parallel; the
/// per-row accumulation order does not depend on scheduling.
pub fn weighted_matrix(
    model: &TfIdfModel,
    table: &EmbeddingTable,
    average: bool,
) -> Vec<DocVector> {
    (0..model.num_docs())
        .into_par_iter()
        .map(|doc| doc_embedding(model, doc, table, average))
        .collect()
}

/// Frozen vocabulary and idf values of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SnapshotRepr", into = "SnapshotRepr")]
pub struct IdfSnapshot {
    vocab: Vec<String>,
    idf: Vec<f64>,
    term_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRepr {
    vocab: Vec<String>,
    idf: Vec<f64>,
}

impl From<SnapshotRepr> for IdfSnapshot {
    fn from(r: SnapshotRepr) -> Self {
        IdfSnapshot::new(r.vocab, r.idf)
    }
}

impl From<IdfSnapshot> for SnapshotRepr {
    fn from(s: IdfSnapshot) -> Self {
        SnapshotRepr {
            vocab: s.vocab,
            idf: s.idf,
        }
    }
}

impl IdfSnapshot {
    fn new(vocab: Vec<String>, idf: Vec<f64>) -> Self {
        let term_index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            vocab,
            idf,
            term_index,
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.term_index.get(term).map(|&i| self.idf[i])
    }

    /// Embeds a new document with the frozen idf. Terms outside the frozen
    /// vocabulary carry no weight; `oov_terms` still counts every distinct
    /// term missing from the embedding table.
    pub fn embed(&self, tokens: &TokenList, table: &EmbeddingTable, average: bool) -> DocVector {
        let mut order: Vec<&str> = Vec::new();
        let mut tf: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            let count = tf.entry(t.as_str()).or_insert(0);
            if *count == 0 {
                order.push(t);
            }
            *count += 1;
        }
        let mut oov_outside_vocab = 0;
        let weights = order.into_iter().filter_map(|t| match self.idf(t) {
            Some(idf) => Some((t, tf[t] as f64 * idf)),
            None => {
                if !table.contains(t) {
                    oov_outside_vocab += 1;
                }
                None
            }
        });
        let weights: Vec<_> = weights.collect();
        let mut out = accumulate(weights.into_iter(), table, average);
        out.oov_terms += oov_outside_vocab;
        out
    }
}
