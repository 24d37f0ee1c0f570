//! GloVe text-format embedding tables.
//!
//! Vectors are stored as `f32` (the on-disk precision of the published
//! GloVe files) in one contiguous arena, with a word -> row index on top.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    rows: HashMap<String, usize>,
    arena: Vec<f32>,
}

/// Parses one `word v1 v2 ... vl` record. `line_no` is only used for error
/// reporting.
pub fn parse_embedding_line(
    line: &str,
    expected_dim: Option<usize>,
    line_no: usize,
) -> Result<(String, Vec<f32>)> {
    let malformed = |reason: String| Error::MalformedLine {
        line: line_no,
        reason,
    };
    let mut fields = line.split_ascii_whitespace();
    let word = fields
        .next()
        .ok_or_else(|| malformed("empty line".into()))?;
    let mut vector = Vec::with_capacity(expected_dim.unwrap_or(0));
    for field in fields {
        let value: f32 = field
            .parse()
            .map_err(|_| malformed(format!("non-numeric field {field:?}")))?;
        if !value.is_finite() {
            return Err(malformed(format!("non-finite value {field:?}")));
        }
        vector.push(value);
    }
    if vector.is_empty() {
        return Err(malformed(format!("no vector components for {word:?}")));
    }
    if let Some(dim) = expected_dim {
        if vector.len() != dim {
            return Err(malformed(format!(
                "expected {dim} components, found {}",
                vector.len()
            )));
        }
    }
    Ok((word.to_string(), vector))
}

impl EmbeddingTable {
    /// Loads a GloVe text file. The dimension is taken from the first record.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let table =
            Self::from_reader(BufReader::with_capacity(1 << 20, file)).map_err(|e| match e {
                Error::Io { source, .. } => Error::io(path, source),
                other => other,
            })?;
        match table {
            Some(t) => Ok(t),
            None => Err(Error::EmptyFile(path.to_path_buf())),
        }
    }

    /// Reads records from any buffered source; `Ok(None)` means the input
    /// held no records at all.
    pub fn from_reader<R: BufRead>(mut reader: R) -> Result<Option<Self>> {
        let mut table: Option<EmbeddingTable> = None;
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let read = reader.read_line(&mut line).map_err(|e| Error::Io {
                path: "<reader>".into(),
                source: e,
            })?;
            if read == 0 {
                break;
            }
            line_no += 1;
            let expected = table.as_ref().map(|t| t.dim);
            let (word, vector) = parse_embedding_line(&line, expected, line_no)?;
            let t = table.get_or_insert_with(|| EmbeddingTable::empty(vector.len()));
            t.insert(word, &vector);
        }
        Ok(table)
    }

    /// Builds a table from in-memory entries; the first occurrence of a word
    /// wins.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut table = Self::empty(dim);
        for (i, (word, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dim {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    reason: format!("expected {dim} components, found {}", vector.len()),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    reason: "non-finite value".into(),
                });
            }
            table.insert(word.into(), &vector);
        }
        Ok(table)
    }

    fn empty(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            rows: HashMap::new(),
            arena: Vec::new(),
        }
    }

    fn insert(&mut self, word: String, vector: &[f32]) {
        if self.rows.contains_key(&word) {
            return;
        }
        self.rows.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.arena.extend_from_slice(vector);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.rows.get(word).map(|&row| self.row(row))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.rows.contains_key(word)
    }

    /// Words in load order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn row(&self, row: usize) -> &[f32] {
        &self.arena[row * self.dim..(row + 1) * self.dim]
    }
}
