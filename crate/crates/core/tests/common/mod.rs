//! Test-only reference implementations. Nothing here calls into the
//! vectorizer or classifier under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

/// Words that survive the default preprocessing pipeline unchanged.
pub const POOL: &[&str] = &[
    "kappa", "delta", "omega", "zulu", "tango", "lima", "kilo", "echo", "golf", "hotel", "oscar",
    "romeo", "sierra", "bravo", "yankee", "juliet",
];

/// Dense weighted document embedding, literally: build the full m x n
/// TF-IDF matrix, give every document the padded n x l embedding block, and
/// accumulate `E[j] * M[t][j]` column by column.
pub struct DenseRows {
    pub rows: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

pub fn dense_weighted_matrix(
    docs: &[Vec<String>],
    embeddings: &BTreeMap<String, Vec<f64>>,
    dim: usize,
    average: bool,
) -> DenseRows {
    let vocab: Vec<&String> = docs
        .iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let m = docs.len();
    let n = vocab.len();

    let mut tf = vec![vec![0.0f64; n]; m];
    for (t, doc) in docs.iter().enumerate() {
        for word in doc {
            let j = vocab.iter().position(|v| *v == word).unwrap();
            tf[t][j] += 1.0;
        }
    }
    let df: Vec<f64> = (0..n)
        .map(|j| (0..m).filter(|&t| tf[t][j] > 0.0).count() as f64)
        .collect();
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + m as f64) / (1.0 + d)).ln() + 1.0)
        .collect();
    let tfidf: Vec<Vec<f64>> = (0..m)
        .map(|t| (0..n).map(|j| tf[t][j] * idf[j]).collect())
        .collect();

    let e: Vec<Vec<f64>> = vocab
        .iter()
        .map(|w| {
            embeddings
                .get(*w)
                .cloned()
                .unwrap_or_else(|| vec![0.0; dim])
        })
        .collect();
    let known: Vec<bool> = vocab.iter().map(|w| embeddings.contains_key(*w)).collect();

    // m x n x l tensor
    let de: Vec<Vec<Vec<f64>>> = (0..m).map(|_| e.clone()).collect();

    let mut rows = Vec::with_capacity(m);
    let mut mass = Vec::with_capacity(m);
    for t in 0..m {
        let mut acc = vec![0.0f64; dim];
        let mut total = 0.0;
        for j in 0..n {
            for k in 0..dim {
                acc[k] += de[t][j][k] * tfidf[t][j];
            }
            if known[j] {
                total += tfidf[t][j];
            }
        }
        if average && total > 0.0 {
            for v in &mut acc {
                *v /= total;
            }
        }
        rows.push(acc);
        mass.push(total);
    }
    DenseRows { rows, mass }
}

pub fn oracle_cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx * ny)
    }
}

pub struct OracleResult {
    /// None when the query vector is zero.
    pub predicted: Option<String>,
    /// code -> similarity for every category
    pub similarities: BTreeMap<String, f64>,
}

/// Appends the query to the categories, builds the dense matrices and scans
/// every similarity.
pub fn oracle_classify(
    categories: &[(String, Vec<String>)],
    query: &[String],
    embeddings: &BTreeMap<String, Vec<f64>>,
    dim: usize,
    average: bool,
) -> OracleResult {
    let mut docs: Vec<Vec<String>> = categories.iter().map(|(_, d)| d.clone()).collect();
    docs.push(query.to_vec());
    let dense = dense_weighted_matrix(&docs, embeddings, dim, average);
    let q = dense.rows.last().unwrap();
    let similarities: BTreeMap<String, f64> = categories
        .iter()
        .zip(&dense.rows)
        .map(|((code, _), row)| (code.clone(), oracle_cosine(row, q)))
        .collect();
    let predicted = if *dense.mass.last().unwrap() == 0.0 {
        None
    } else {
        let best = similarities
            .values()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        similarities
            .iter()
            .filter(|(_, &s)| best - s <= 1e-12)
            .map(|(c, _)| c.clone())
            .min()
    };
    OracleResult {
        predicted,
        similarities,
    }
}

/// A random tiny classification problem: at most `max_m` categories with
/// unique 5-digit codes, at most `max_n` distinct terms, dimension at most
/// `max_l`. Some terms have no embedding; embedded components are exact
/// `f32` values so the on-disk table holds them without rounding.
pub struct TinyInstance {
    pub categories: Vec<(String, Vec<String>)>,
    pub query: Vec<String>,
    pub embeddings: BTreeMap<String, Vec<f64>>,
    pub dim: usize,
}

pub fn tiny_instance<R: Rng>(
    rng: &mut R,
    max_m: usize,
    max_n: usize,
    max_l: usize,
) -> TinyInstance {
    let dim = rng.gen_range(1..=max_l);
    let n = rng.gen_range(2..=max_n.min(POOL.len()));
    let terms: Vec<String> = POOL
        .choose_multiple(rng, n)
        .map(|s| s.to_string())
        .collect();
    let mut embeddings = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        // keep at least one term embedded
        if i == 0 || rng.gen_bool(0.85) {
            embeddings.insert(
                t.clone(),
                (0..dim)
                    .map(|_| f64::from(rng.gen_range(-1.0f32..1.0)))
                    .collect(),
            );
        }
    }
    let m = rng.gen_range(1..=max_m);
    let mut codes = BTreeSet::new();
    while codes.len() < m {
        codes.insert(format!("{:05}", rng.gen_range(0..100_000)));
    }
    let mut codes: Vec<String> = codes.into_iter().collect();
    codes.shuffle(rng);
    let mut categories: Vec<(String, Vec<String>)> = codes
        .into_iter()
        .map(|code| {
            let len = rng.gen_range(1..=5);
            let words = (0..len)
                .map(|_| terms.choose(rng).unwrap().clone())
                .collect();
            (code, words)
        })
        .collect();
    // the query draws from the same term set; terms beyond the categories'
    // vocabulary are allowed
    let qlen = rng.gen_range(1..=4);
    let query = (0..qlen)
        .map(|_| terms.choose(rng).unwrap().clone())
        .collect();
    categories.sort_by(|a, b| a.0.cmp(&b.0));
    TinyInstance {
        categories,
        query,
        embeddings,
        dim,
    }
}

impl TinyInstance {
    pub fn embedding_text(&self) -> String {
        let mut out = String::new();
        for (w, v) in &self.embeddings {
            out.push_str(w);
            for x in v {
                out.push_str(&format!(" {}", *x as f32));
            }
            out.push('\n');
        }
        out
    }
}
